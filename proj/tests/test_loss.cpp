#include <cmath>

#include "acgad/loss.hpp"
#include "acgad/rng.hpp"
#include "doctest.h"

using namespace acgad;

namespace {

// Straight transcription of the objective, no shared code with the library.
double naive_info_nce(const Eigen::MatrixXd& a, const Eigen::MatrixXd& p,
                      const Eigen::MatrixXd& n, const std::vector<char>& hn,
                      double tau) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double num = std::exp(a.row(i).dot(p.row(i)) / tau);
    double den = num;
    if (hn[static_cast<std::size_t>(i)])
      den += std::exp(a.row(i).dot(n.row(i)) / tau);
    for (Eigen::Index j = 0; j < a.rows(); ++j)
      if (j != i) den += std::exp(a.row(i).dot(a.row(j)) / tau);
    total += -std::log(num / den);
  }
  return total;
}

double naive_uniformity(const Eigen::MatrixXd& z) {
  double s = 0.0;
  int cnt = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      if (i == j) continue;
      s += std::exp(-2.0 * (z.row(i) - z.row(j)).squaredNorm());
      ++cnt;
    }
  return std::log(s / cnt);
}

Eigen::MatrixXd unit_rows(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    m.row(i) /= m.row(i).norm();
  }
  return m;
}

}  // namespace

TEST_CASE("info_nce hand value") {
  // One anchor with an aligned positive, an opposed negative and a second
  // orthogonal anchor, at tau = 1:
  //   -1 + ln(e + 1 + 1/e)
  Eigen::MatrixXd a(2, 2), p(2, 2), n(2, 2);
  a << 1, 0, 0, 1;
  p << 1, 0, 0, 1;
  n << -1, 0, 0, -1;
  std::vector<char> hn{1, 0};
  auto r = info_nce(a, p, n, hn, 1.0);
  double l0 = -1.0 + std::log(std::exp(1.0) + 1.0 + std::exp(-1.0));
  double l1 = -1.0 + std::log(std::exp(1.0) + 1.0);  // no negative for row 1
  CHECK(r.loss == doctest::Approx(l0 + l1).epsilon(1e-12));
  CHECK(l0 == doctest::Approx(0.4076059644).epsilon(1e-9));
  // Rows without a negative keep a zero d_neg.
  CHECK(r.d_neg.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.d_neg.row(0).cwiseAbs().maxCoeff() > 0.0);

  // A lone anchor with a discarded negative has nothing to contrast against.
  Eigen::MatrixXd one(1, 2), onep(1, 2);
  one << 1, 0;
  onep << 0.6, 0.8;
  auto lone = info_nce(one, onep, one, {0}, 0.1);
  CHECK(lone.loss == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lone.d_anchor.cwiseAbs().maxCoeff() < 1e-12);

  // With any negative term present the per-anchor loss is strictly positive.
  auto withneg = info_nce(one, onep, one, {1}, 0.1);
  CHECK(withneg.loss > 0.0);
}

TEST_CASE("info_nce matches the naive form and is scale-stable") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto a = unit_rows(7, 5, seed);
    auto p = unit_rows(7, 5, seed + 100);
    auto n = unit_rows(7, 5, seed + 200);
    std::vector<char> hn{1, 1, 0, 1, 0, 1, 1};
    for (double tau : {1.0, 0.1}) {
      auto r = info_nce(a, p, n, hn, tau);
      CHECK(r.loss ==
            doctest::Approx(naive_info_nce(a, p, n, hn, tau)).epsilon(1e-10));
      CHECK(std::isfinite(r.loss));
    }
    // tau = 0.01 overflows the naive form but not the shifted one.
    auto r = info_nce(a, p, n, hn, 0.01);
    CHECK(std::isfinite(r.loss));
    CHECK(std::isfinite(r.d_anchor.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("info_nce gradients match finite differences") {
  auto a = unit_rows(5, 4, 11);
  auto p = unit_rows(5, 4, 12);
  auto n = unit_rows(5, 4, 13);
  std::vector<char> hn{1, 0, 1, 1, 0};
  const double tau = 0.5;
  auto r = info_nce(a, p, n, hn, tau);
  const double h = 1e-6;
  auto fd_check = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& grad) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double keep = m(i, j);
        m(i, j) = keep + h;
        double up = info_nce(a, p, n, hn, tau).loss;
        m(i, j) = keep - h;
        double dn = info_nce(a, p, n, hn, tau).loss;
        m(i, j) = keep;
        double fd = (up - dn) / (2 * h);
        CHECK(std::abs(fd - grad(i, j)) <=
              1e-5 * std::max(1.0, std::abs(fd)));
      }
  };
  fd_check(a, r.d_anchor);
  fd_check(p, r.d_pos);
  fd_check(n, r.d_neg);
}

TEST_CASE("uniformity hand values") {
  Eigen::MatrixXd z(2, 2);
  z << 0, 0, 1, 0;  // distance 1
  CHECK(uniformity(z).loss == doctest::Approx(-2.0).epsilon(1e-12));
  z << 1, 0, -1, 0;  // distance 2
  CHECK(uniformity(z).loss == doctest::Approx(-8.0).epsilon(1e-12));
  z << 1, 0, 1, 0;  // coincident
  CHECK(uniformity(z).loss == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::MatrixXd one(1, 2);
  one << 1, 0;
  auto r = uniformity(one);
  CHECK(r.loss == 0.0);
  CHECK(r.d_z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniformity matches the naive form with exact gradients") {
  auto z = unit_rows(8, 6, 77);
  auto r = uniformity(z);
  CHECK(r.loss == doctest::Approx(naive_uniformity(z)).epsilon(1e-10));
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double keep = z(i, j);
      z(i, j) = keep + h;
      double up = uniformity(z).loss;
      z(i, j) = keep - h;
      double dn = uniformity(z).loss;
      z(i, j) = keep;
      double fd = (up - dn) / (2 * h);
      CHECK(std::abs(fd - r.d_z(i, j)) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  // Coincident points repel nothing: the gradient vanishes by symmetry.
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(3, 4);
  CHECK(uniformity(same).d_z.cwiseAbs().maxCoeff() == 0.0);
}
