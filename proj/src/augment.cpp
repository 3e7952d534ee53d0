#include "acgad/augment.hpp"

#include <algorithm>
#include <cmath>

#include "acgad/rng.hpp"

namespace acgad {

namespace {

constexpr double kEdgeDropProb = 0.2;
constexpr double kMaskFraction = 0.2;
constexpr double kNoiseStd = 0.1;
constexpr double kDegreeDropCap = 0.5;

const char* stream_tag(AugmentStrategy s) {
  switch (s) {
    case AugmentStrategy::RandomEdgeFeature: return "augment.random";
    case AugmentStrategy::DegreeBased: return "augment.degree";
    case AugmentStrategy::FeatureNoise: return "augment.noise";
  }
  return "augment";
}

}  // namespace

std::string augment_strategy_name(AugmentStrategy s) {
  switch (s) {
    case AugmentStrategy::RandomEdgeFeature: return "random-edge-feature";
    case AugmentStrategy::DegreeBased: return "degree-based";
    case AugmentStrategy::FeatureNoise: return "feature-noise";
  }
  return "unknown";
}

std::vector<AugmentView> baseline_augment(const AttributedGraph& g,
                                          AugmentStrategy s,
                                          std::uint64_t seed,
                                          int view_index) {
  std::int64_t max_deg = 1;
  for (NodeId v = 0; v < g.n; ++v) max_deg = std::max(max_deg, g.degree(v));

  std::vector<AugmentView> views(static_cast<std::size_t>(g.n));
  for (NodeId v = 0; v < g.n; ++v) {
    Rng rng(derive_seed(seed, stream_tag(s), static_cast<std::uint64_t>(v),
                        static_cast<std::uint64_t>(view_index)));
    auto& view = views[static_cast<std::size_t>(v)];
    auto row = g.feature_row(v);
    view.features.assign(row.begin(), row.end());

    switch (s) {
      case AugmentStrategy::RandomEdgeFeature: {
        for (NodeId j : g.neighbors(v))
          if (rng.bernoulli(kEdgeDropProb)) view.edits.removes.push_back(j);
        const int nmask = static_cast<int>(
            std::ceil(kMaskFraction * static_cast<double>(g.d)));
        auto dims = rng.sample_without_replacement(g.d, nmask);
        for (int c : dims) view.features[static_cast<std::size_t>(c)] = 0.0;
        break;
      }
      case AugmentStrategy::DegreeBased: {
        for (NodeId j : g.neighbors(v)) {
          const double p = std::min(
              kDegreeDropCap,
              static_cast<double>(g.degree(j)) / static_cast<double>(max_deg));
          if (rng.bernoulli(p)) view.edits.removes.push_back(j);
        }
        break;
      }
      case AugmentStrategy::FeatureNoise: {
        for (double& x : view.features) x += kNoiseStd * rng.normal();
        break;
      }
    }
  }
  return views;
}

}  // namespace acgad
