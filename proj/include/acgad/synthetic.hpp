#pragma once

#include <cstdint>

#include "acgad/graph.hpp"

namespace acgad {

// Homophilous planted-partition benchmark graph: near-equal contiguous
// communities wired densely inside and sparsely across, features drawn
// around per-community orthogonal centers so same-community neighbors are
// cosine-similar. Labels are all zero; anomalies are injected separately.
struct SyntheticConfig {
  NodeId n = 500;
  int d = 8;
  int communities = 8;     // must not exceed d
  double p_in = 0.15;      // intra-community edge probability
  double p_out = 0.002;    // inter-community edge probability
  double center_scale = 3.0;
  double noise_std = 0.5;
  std::uint64_t seed = 0;
};

AttributedGraph synthetic_graph(const SyntheticConfig& cfg);

// Community of node i under the contiguous block layout used above.
int synthetic_community(NodeId i, NodeId n, int communities);

}  // namespace acgad
