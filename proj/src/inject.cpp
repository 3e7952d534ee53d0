#include "acgad/inject.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "acgad/rng.hpp"

namespace acgad {

namespace {

std::vector<std::set<NodeId>> adjacency_sets(const AttributedGraph& g) {
  std::vector<std::set<NodeId>> adj(g.n);
  for (NodeId i = 0; i < g.n; ++i) {
    auto nb = g.neighbors(i);
    adj[i].insert(nb.begin(), nb.end());
  }
  return adj;
}

std::vector<std::pair<NodeId, NodeId>> to_edge_list(
    const std::vector<std::set<NodeId>>& adj) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < static_cast<NodeId>(adj.size()); ++i)
    for (NodeId j : adj[i])
      if (i < j) edges.emplace_back(i, j);
  return edges;
}

}  // namespace

InjectionResult inject_anomalies(const AttributedGraph& g,
                                 const InjectionConfig& cfg) {
  if (cfg.ratio < 0.0 || cfg.ratio > 1.0)
    throw std::invalid_argument("injection ratio must be in [0, 1]");
  InjectionResult res;
  std::int64_t m = static_cast<std::int64_t>(
      std::ceil(cfg.ratio * static_cast<double>(g.n)));
  m = std::min<std::int64_t>(m, g.n);
  std::int64_t n_struct = (m + 1) / 2;

  Rng pick(derive_seed(cfg.seed, "inject.pick"));
  auto chosen = pick.sample_without_replacement(g.n, m);
  for (std::int64_t k = 0; k < m; ++k) {
    NodeId v = static_cast<NodeId>(chosen[k]);
    (k < n_struct ? res.structural : res.attribute).push_back(v);
  }
  std::sort(res.structural.begin(), res.structural.end());
  std::sort(res.attribute.begin(), res.attribute.end());

  auto adj = adjacency_sets(g);
  // Structural corruption: replace a fixed share of each node's incident
  // edges with edges to fresh non-neighbors. Applied sequentially in node
  // order so earlier rewires are visible to later ones.
  for (NodeId v : res.structural) {
    Rng rng(derive_seed(cfg.seed, "inject.struct", static_cast<std::uint64_t>(v)));
    std::vector<NodeId> nb(adj[v].begin(), adj[v].end());
    std::int64_t deg = static_cast<std::int64_t>(nb.size());
    std::int64_t r = std::llround(cfg.rewire_fraction * static_cast<double>(deg));
    if (r == 0) continue;
    auto drop_idx = rng.sample_without_replacement(deg, r);
    std::set<NodeId> dropped;
    for (auto idx : drop_idx) dropped.insert(nb[static_cast<std::size_t>(idx)]);
    for (NodeId u : dropped) {
      adj[v].erase(u);
      adj[u].erase(v);
    }
    for (std::int64_t t = 0; t < r; ++t) {
      // Candidates: everything except v, current neighbors and the nodes we
      // just disconnected (a rewire must produce a genuinely new edge).
      std::vector<NodeId> cand;
      cand.reserve(static_cast<std::size_t>(g.n));
      for (NodeId w = 0; w < g.n; ++w)
        if (w != v && !adj[v].count(w) && !dropped.count(w)) cand.push_back(w);
      if (cand.empty()) {
        res.rewires_skipped += r - t;
        break;
      }
      NodeId w = cand[rng.next_below(cand.size())];
      adj[v].insert(w);
      adj[w].insert(v);
    }
  }

  std::vector<double> feats = g.features;
  for (NodeId v : res.attribute) {
    Rng rng(derive_seed(cfg.seed, "inject.attr", static_cast<std::uint64_t>(v)));
    double* row = feats.data() + static_cast<std::size_t>(v) * g.d;
    for (int c = 0; c < g.d; ++c) row[c] += rng.normal(0.0, cfg.noise_std);
    std::int64_t n_mask =
        static_cast<std::int64_t>(std::ceil(cfg.mask_fraction * g.d));
    n_mask = std::min<std::int64_t>(n_mask, g.d);
    for (auto c : rng.sample_without_replacement(g.d, n_mask)) row[c] = 0.0;
  }

  std::vector<std::uint8_t> labels(g.n, 0);
  for (NodeId v : res.structural) labels[v] = 1;
  for (NodeId v : res.attribute) labels[v] = 1;

  res.graph = build_graph(g.n, g.d, to_edge_list(adj), std::move(feats),
                          std::move(labels));
  return res;
}

PerturbResult perturb_graph(const AttributedGraph& g,
                            const PerturbationConfig& cfg) {
  PerturbResult res;
  std::vector<double> feats = g.features;
  if (cfg.feature_noise_std > 0.0) {
    Rng rng(derive_seed(cfg.seed, "perturb.noise"));
    for (double& v : feats) v += rng.normal(0.0, cfg.feature_noise_std);
  }
  auto adj = adjacency_sets(g);
  std::int64_t flips = static_cast<std::int64_t>(
      std::floor(cfg.edge_flip_rate *
                 static_cast<double>(g.undirected_edge_count())));
  std::int64_t max_pairs =
      static_cast<std::int64_t>(g.n) * (g.n - 1) / 2;
  flips = std::min(flips, max_pairs);
  if (flips > 0) {
    Rng rng(derive_seed(cfg.seed, "perturb.flips"));
    std::set<std::pair<NodeId, NodeId>> toggled;
    std::int64_t guard = 0;
    while (static_cast<std::int64_t>(toggled.size()) < flips) {
      if (++guard > 1000 * flips + 10000)
        throw std::runtime_error("edge flip sampling failed to converge");
      NodeId a = static_cast<NodeId>(rng.next_below(g.n));
      NodeId b = static_cast<NodeId>(rng.next_below(g.n));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!toggled.insert({a, b}).second) continue;
      if (adj[a].count(b)) {
        adj[a].erase(b);
        adj[b].erase(a);
      } else {
        adj[a].insert(b);
        adj[b].insert(a);
      }
    }
    res.flips_applied = flips;
  }
  res.graph = build_graph(g.n, g.d, to_edge_list(adj), std::move(feats),
                          std::vector<std::uint8_t>(g.labels));
  return res;
}

}  // namespace acgad
