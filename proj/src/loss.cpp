#include "acgad/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace acgad {

InfoNceResult info_nce(const Eigen::MatrixXd& anchor,
                       const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                       const std::vector<char>& has_neg, double tau) {
  const Eigen::Index b = anchor.rows();
  const Eigen::Index k = anchor.cols();
  if (pos.rows() != b || pos.cols() != k || neg.rows() != b ||
      neg.cols() != k || static_cast<Eigen::Index>(has_neg.size()) != b)
    throw std::invalid_argument("info_nce: shape mismatch");
  if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be positive");

  InfoNceResult out;
  out.d_anchor = Eigen::MatrixXd::Zero(b, k);
  out.d_pos = Eigen::MatrixXd::Zero(b, k);
  out.d_neg = Eigen::MatrixXd::Zero(b, k);
  if (b == 0) return out;

  const Eigen::MatrixXd cross = anchor * anchor.transpose() / tau;

  for (Eigen::Index i = 0; i < b; ++i) {
    const double s_pos = anchor.row(i).dot(pos.row(i)) / tau;
    const bool with_neg = has_neg[static_cast<std::size_t>(i)] != 0;
    const double s_neg = with_neg ? anchor.row(i).dot(neg.row(i)) / tau : 0.0;

    double m = s_pos;
    if (with_neg) m = std::max(m, s_neg);
    for (Eigen::Index j = 0; j < b; ++j)
      if (j != i) m = std::max(m, cross(i, j));

    double denom = std::exp(s_pos - m);
    if (with_neg) denom += std::exp(s_neg - m);
    for (Eigen::Index j = 0; j < b; ++j)
      if (j != i) denom += std::exp(cross(i, j) - m);

    out.loss += -s_pos + m + std::log(denom);

    // Softmax weights of each similarity term feed the chain rule.
    const double scale = 1.0 / tau;
    const double w_pos = std::exp(s_pos - m) / denom;
    out.d_anchor.row(i) += (w_pos - 1.0) * scale * pos.row(i);
    out.d_pos.row(i) += (w_pos - 1.0) * scale * anchor.row(i);
    if (with_neg) {
      const double w_neg = std::exp(s_neg - m) / denom;
      out.d_anchor.row(i) += w_neg * scale * neg.row(i);
      out.d_neg.row(i) += w_neg * scale * anchor.row(i);
    }
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      const double w_j = std::exp(cross(i, j) - m) / denom;
      out.d_anchor.row(i) += w_j * scale * anchor.row(j);
      out.d_anchor.row(j) += w_j * scale * anchor.row(i);
    }
  }
  return out;
}

UniformityResult uniformity(const Eigen::MatrixXd& z) {
  const Eigen::Index b = z.rows();
  UniformityResult out;
  out.d_z = Eigen::MatrixXd::Zero(b, z.cols());
  if (b < 2) return out;

  double total = 0.0;
  Eigen::MatrixXd force = Eigen::MatrixXd::Zero(b, z.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      const Eigen::RowVectorXd diff = z.row(i) - z.row(j);
      const double w = std::exp(-2.0 * diff.squaredNorm());
      total += w;
      // Ordered pairs: (i, j) and (j, i) each contribute, so every
      // unordered pair pushes z_i with weight -8 w (z_i - z_j) in total;
      // this loop accumulates the -4 w piece from each direction.
      force.row(i) += -4.0 * w * diff;
      force.row(j) += 4.0 * w * diff;
    }
  }
  const double pairs = static_cast<double>(b) * static_cast<double>(b - 1);
  out.loss = std::log(total / pairs);
  out.d_z = force / total;
  return out;
}

}  // namespace acgad
