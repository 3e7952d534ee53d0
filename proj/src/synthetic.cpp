#include "acgad/synthetic.hpp"

#include <stdexcept>

#include "acgad/rng.hpp"

namespace acgad {

int synthetic_community(NodeId i, NodeId n, int communities) {
  return static_cast<int>((static_cast<std::int64_t>(i) * communities) / n);
}

AttributedGraph synthetic_graph(const SyntheticConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("synthetic_graph: n < 2");
  if (cfg.communities < 1 || cfg.communities > cfg.d)
    throw std::invalid_argument(
        "synthetic_graph: communities must be in [1, d]");
  if (cfg.p_in < 0 || cfg.p_in > 1 || cfg.p_out < 0 || cfg.p_out > 1)
    throw std::invalid_argument("synthetic_graph: probabilities outside [0,1]");

  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    Rng rng(derive_seed(cfg.seed, "synth.edges"));
    for (NodeId i = 0; i < cfg.n; ++i) {
      const int ci = synthetic_community(i, cfg.n, cfg.communities);
      for (NodeId j = i + 1; j < cfg.n; ++j) {
        const int cj = synthetic_community(j, cfg.n, cfg.communities);
        const double p = ci == cj ? cfg.p_in : cfg.p_out;
        if (rng.bernoulli(p)) edges.emplace_back(i, j);
      }
    }
  }

  std::vector<double> features(static_cast<std::size_t>(cfg.n) * cfg.d, 0.0);
  {
    Rng rng(derive_seed(cfg.seed, "synth.feat"));
    for (NodeId i = 0; i < cfg.n; ++i) {
      const int c = synthetic_community(i, cfg.n, cfg.communities);
      double* row = features.data() + static_cast<std::size_t>(i) * cfg.d;
      for (int k = 0; k < cfg.d; ++k) row[k] = cfg.noise_std * rng.normal();
      row[c] += cfg.center_scale;
    }
  }

  return build_graph(cfg.n, cfg.d, edges, std::move(features),
                     std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.n), 0));
}

}  // namespace acgad
