#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "acgad/counterfactual.hpp"
#include "acgad/graph.hpp"

namespace acgad {

inline constexpr int kHiddenDim = 64;
inline constexpr int kEmbedDim = 32;
inline constexpr int kProjHiddenDim = 64;

/// Â = D̃^{-1/2}(A + I)D̃^{-1/2} in CSR form (self-loops included).
struct NormalizedAdjacency {
  NodeId n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<NodeId> col;
  std::vector<double> val;
  std::vector<double> inv_sqrt;  // per node, (degree + 1)^{-1/2}
};

NormalizedAdjacency normalize_adjacency(const AttributedGraph& g);

/// Â · X for a dense matrix with n rows.
Eigen::MatrixXd adj_multiply(const NormalizedAdjacency& a,
                             const Eigen::MatrixXd& x);

struct AdamMoments {
  Eigen::MatrixXd m, v;
};

/// Encoder weights: 2-layer GCN (d -> 64 -> 32) and 2-layer projection head
/// (32 -> 64 -> 32), plus Adam state.
struct ModelParams {
  Eigen::MatrixXd W0, W1, Wp1, Wp2;
  AdamMoments a0, a1, ap1, ap2;
  std::int64_t adam_steps = 0;

  int input_dim() const { return static_cast<int>(W0.rows()); }
  static ModelParams init(int d, std::uint64_t seed);
};

struct ParamGrads {
  Eigen::MatrixXd W0, W1, Wp1, Wp2;
  void zero(const ModelParams& p);
  bool all_finite() const;
};

/// Immutable per-graph state shared by every forward pass: the normalized
/// adjacency, the dense feature matrix and the precomputed product Â·X.
struct EncoderContext {
  const AttributedGraph* g = nullptr;
  NormalizedAdjacency adj;
  Eigen::MatrixXd X;  // n x d
  Eigen::MatrixXd Q;  // Â X, parameter-independent
};

EncoderContext make_encoder_context(const AttributedGraph& g);

/// Whole-graph forward pass with cached intermediates for backward.
struct FullForward {
  Eigen::MatrixXd P, H1, M, Zenc;   // pre/post ReLU GCN intermediates
  Eigen::MatrixXd T1, Hp, Hout;     // projection head intermediates
  Eigen::MatrixXd Z;                // row-normalized embeddings, n x 32
  Eigen::VectorXd norms;            // pre-normalization row norms
  std::vector<std::uint8_t> degenerate;  // rows with zero norm
};

FullForward full_forward(const EncoderContext& ctx, const ModelParams& p);

/// Single-node forward over the 2-hop receptive field, with the node's
/// feature row and incident edges optionally substituted and Â renormalized
/// locally. With no overrides this reproduces the whole-graph result for the
/// node.
struct LocalView {
  NodeId node = -1;
  std::vector<NodeId> hop1;  // effective closed neighborhood, sorted, incl node
  Eigen::VectorXd a_i;       // Â' entries from node to hop1
  Eigen::MatrixXd q;         // |hop1| x d aggregated inputs
  Eigen::MatrixXd p, h1;     // |hop1| x 64
  Eigen::RowVectorXd m, zenc, t1, hp, hout, z;
  double norm = 0.0;
  bool degenerate = false;
};

LocalView local_view_forward(const EncoderContext& ctx, const ModelParams& p,
                             NodeId i, const double* features_override,
                             const EdgeEditSet* edits);

/// Accumulates d(loss)/d(params) given d(loss)/dZ rows of the whole-graph
/// pass. Rows of dz for untouched nodes must be zero.
void full_backward(const EncoderContext& ctx, const ModelParams& p,
                   const FullForward& f, const Eigen::MatrixXd& dz,
                   ParamGrads& out);

/// Accumulates gradients through one local view given d(loss)/dz for it.
void view_backward(const LocalView& v, const ModelParams& p,
                   const Eigen::RowVectorXd& dz, ParamGrads& out);

/// Adam with coupled L2 weight decay (decay added to the gradient),
/// beta1=0.9, beta2=0.999, eps=1e-8, bias correction. Throws
/// std::runtime_error("diverged") on non-finite gradients or weights.
void adam_step(ModelParams& p, const ParamGrads& g, double lr,
               double weight_decay);

/// Convenience spec surface: embeddings for a node set, each optionally under
/// a (features, edits) override.
struct ViewOverride {
  const double* features = nullptr;  // length d or nullptr
  const EdgeEditSet* edits = nullptr;
};

struct EmbeddingSet {
  std::vector<NodeId> nodes;
  Eigen::MatrixXd z;  // |nodes| x 32
  std::vector<std::uint8_t> degenerate;
};

EmbeddingSet forward_nodes(const EncoderContext& ctx, const ModelParams& p,
                           const std::vector<NodeId>& nodes,
                           const std::vector<ViewOverride>& overrides = {});

/// Versioned text checkpoint: shapes, weights, Adam state, step counter.
/// Values are written with round-trip precision; loading an incompatible
/// version or malformed file throws std::runtime_error.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace acgad
