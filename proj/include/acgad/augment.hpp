#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acgad/counterfactual.hpp"
#include "acgad/graph.hpp"

namespace acgad {

enum class AugmentStrategy { RandomEdgeFeature, DegreeBased, FeatureNoise };

std::string augment_strategy_name(AugmentStrategy s);

// A perturbed per-node view: a full feature row plus incident-edge removals,
// consumable by the same local forward pass the counterfactual views use.
struct AugmentView {
  std::vector<double> features;
  EdgeEditSet edits;
};

// One view per node. view_index selects an independent stream so callers can
// draw several views of the same node under one seed.
std::vector<AugmentView> baseline_augment(const AttributedGraph& g,
                                          AugmentStrategy s,
                                          std::uint64_t seed,
                                          int view_index = 0);

}  // namespace acgad
