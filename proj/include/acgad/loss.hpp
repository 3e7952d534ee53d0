#pragma once

#include <Eigen/Dense>
#include <vector>

namespace acgad {

// Contrastive objective over a batch of embedding rows. Anchors, positives
// and negatives are expected to be unit rows (the encoder normalizes); dot
// products therefore act as cosine similarities.
struct InfoNceResult {
  double loss = 0.0;
  Eigen::MatrixXd d_anchor;
  Eigen::MatrixXd d_pos;
  Eigen::MatrixXd d_neg;  // rows for anchors without a negative stay zero
};

// Sum over anchors of -log softmax(sim(anchor, pos) / tau) where the
// denominator covers the positive, the anchor's own counterfactual negative
// (when has_neg is set) and every other anchor in the batch. Log-sum-exp is
// max-shifted so large 1/tau values stay finite.
InfoNceResult info_nce(const Eigen::MatrixXd& anchor,
                       const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                       const std::vector<char>& has_neg, double tau);

struct UniformityResult {
  double loss = 0.0;
  Eigen::MatrixXd d_z;
};

// log of the mean Gaussian potential e^{-2 |z_i - z_j|^2} over ordered pairs
// i != j. Fewer than two rows yields 0 with a zero gradient.
UniformityResult uniformity(const Eigen::MatrixXd& z);

}  // namespace acgad
