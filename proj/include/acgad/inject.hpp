#pragma once

#include <cstdint>
#include <vector>

#include "acgad/graph.hpp"

namespace acgad {

/// Synthetic anomaly injection. ceil(ratio * n) nodes are tagged as
/// anomalous; the first half (rounded up) get structural corruption, the rest
/// attribute corruption.
struct InjectionConfig {
  double ratio = 0.05;
  double rewire_fraction = 0.5;  // share of incident edges rewired
  double noise_std = 0.5;        // attribute noise scale
  double mask_fraction = 0.3;    // share of dimensions zeroed, rounded up
  std::uint64_t seed = 0;
};

struct InjectionResult {
  AttributedGraph graph;              // labels mark injected nodes
  std::vector<NodeId> structural;     // ascending
  std::vector<NodeId> attribute;      // ascending
  std::int64_t rewires_skipped = 0;   // rewires dropped for lack of targets
};

/// Applies the injection protocol. Structural anomalies have
/// round(rewire_fraction * degree) incident edges removed and replaced by
/// edges to uniformly chosen fresh non-neighbors; attribute anomalies get
/// N(0, noise_std^2) added to every dimension and then ceil(mask_fraction*d)
/// randomly chosen dimensions zeroed. Existing labels are replaced by the
/// injected ground truth.
InjectionResult inject_anomalies(const AttributedGraph& g,
                                 const InjectionConfig& cfg);

/// Robustness perturbation: uniform feature noise plus random edge flips.
struct PerturbationConfig {
  double feature_noise_std = 0.0;
  double edge_flip_rate = 0.0;  // floor(rate * |E|) unordered pairs toggled
  std::uint64_t seed = 0;
};

struct PerturbResult {
  AttributedGraph graph;  // labels preserved
  std::int64_t flips_applied = 0;
};

PerturbResult perturb_graph(const AttributedGraph& g,
                            const PerturbationConfig& cfg);

}  // namespace acgad
