#include "acgad/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acgad/rng.hpp"

namespace acgad {

std::vector<NodeId> effective_neighbors(const AttributedGraph& g, NodeId i,
                                        const EdgeEditSet* edits) {
  auto nb = g.neighbors(i);
  std::vector<NodeId> out(nb.begin(), nb.end());
  if (!edits) return out;
  for (NodeId r : edits->removes) {
    auto it = std::lower_bound(out.begin(), out.end(), r);
    if (it != out.end() && *it == r) out.erase(it);
  }
  for (NodeId a : edits->adds) {
    auto it = std::lower_bound(out.begin(), out.end(), a);
    if (it == out.end() || *it != a) out.insert(it, a);
  }
  return out;
}

double consistency_score(const AttributedGraph& g, NodeId i,
                         const double* features_override,
                         const EdgeEditSet* edits,
                         const ConsistencyConfig& ccfg) {
  auto nb = effective_neighbors(g, i, edits);
  if (nb.empty())
    throw std::domain_error("undefined consistency: node has no neighbors");
  const double* xi =
      features_override ? features_override
                        : g.features.data() + static_cast<std::size_t>(i) * g.d;
  std::span<const double> x(xi, static_cast<std::size_t>(g.d));

  // Neighborhood centroid and scalar spread over the effective neighbor set.
  std::vector<double> centroid(g.d, 0.0);
  double mean = 0.0;
  for (NodeId j : nb) {
    auto row = g.feature_row(j);
    for (int c = 0; c < g.d; ++c) {
      centroid[c] += row[c];
      mean += row[c];
    }
  }
  const double cnt = static_cast<double>(nb.size());
  for (double& v : centroid) v /= cnt;
  mean /= cnt * g.d;
  double var = 0.0;
  for (NodeId j : nb)
    for (double v : g.feature_row(j)) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / (cnt * g.d));

  double sq = 0.0;
  for (int c = 0; c < g.d; ++c) sq += (x[c] - centroid[c]) * (x[c] - centroid[c]);
  double attr = std::sqrt(sq) / (sd + ccfg.delta);

  std::int64_t similar = 0;
  for (NodeId j : nb)
    if (cosine_sim(x, g.feature_row(j)) > ccfg.sim_threshold) ++similar;
  double frac = static_cast<double>(similar) / cnt;

  return ccfg.lambda_attr * attr + ccfg.lambda_struct * (1.0 - frac);
}

namespace {

struct CentroidAxis {
  std::vector<double> unit;  // (centroid - x_i) / (dist + delta)
  double dist = 0.0;
};

CentroidAxis centroid_axis(const AttributedGraph& g, NodeId i, double delta) {
  auto stats = neighbor_stats(g, i);
  auto x = g.feature_row(i);
  CentroidAxis axis;
  axis.unit.resize(g.d);
  double sq = 0.0;
  for (int c = 0; c < g.d; ++c) {
    axis.unit[c] = stats.centroid[c] - x[c];
    sq += axis.unit[c] * axis.unit[c];
  }
  axis.dist = std::sqrt(sq);
  for (double& v : axis.unit) v /= (axis.dist + delta);
  return axis;
}

FeatureCf feature_cf_impl(const AttributedGraph& g, NodeId i, CfMode mode,
                          const CfConfig& cfg, const ConsistencyConfig& ccfg,
                          double fstd) {
  FeatureCf out;
  auto x = g.feature_row(i);
  out.features.assign(x.begin(), x.end());
  out.status = mode == CfMode::Positive ? CfStatus::Fallback : CfStatus::Discarded;
  if (g.degree(i) == 0) return out;

  if (fstd < 0.0) fstd = feature_std(g);
  const double bound = 0.5 * fstd;
  auto axis = centroid_axis(g, i, ccfg.delta);
  double target = mode == CfMode::Positive ? cfg.gamma - 1.0 : 1.0 - cfg.beta;
  double alpha = bound > 0.0
                     ? std::min(cfg.max_step, target * axis.dist / bound)
                     : cfg.max_step;
  const double c0 = consistency_score(g, i, nullptr, nullptr, ccfg);
  const double sign = mode == CfMode::Positive ? -1.0 : 1.0;

  std::vector<double> cand(static_cast<std::size_t>(g.d));
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    double norm_sq = 0.0;
    for (int c = 0; c < g.d; ++c) {
      double step = sign * alpha * axis.unit[c];
      cand[c] = x[c] + step;
      norm_sq += step * step;
    }
    if (std::sqrt(norm_sq) <= bound) {
      double c1 = consistency_score(g, i, cand.data(), nullptr, ccfg);
      bool ok = mode == CfMode::Positive ? c1 > c0 : c1 < c0;
      if (ok) {
        out.features = cand;
        out.status = CfStatus::Ok;
        out.retries = attempt;
        return out;
      }
    }
    alpha *= 0.5;
  }
  out.retries = cfg.max_retries;
  return out;
}

}  // namespace

FeatureCf gen_feature_cf_positive(const AttributedGraph& g, NodeId i,
                                  const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg,
                                  double feature_std_hint) {
  return feature_cf_impl(g, i, CfMode::Positive, cfg, ccfg, feature_std_hint);
}

FeatureCf gen_feature_cf_negative(const AttributedGraph& g, NodeId i,
                                  const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg,
                                  double feature_std_hint) {
  return feature_cf_impl(g, i, CfMode::Negative, cfg, ccfg, feature_std_hint);
}

double homophily(const AttributedGraph& g, NodeId i, const EdgeEditSet* edits,
                 double sim_threshold) {
  auto nb = effective_neighbors(g, i, edits);
  if (nb.empty())
    throw std::domain_error("undefined homophily: node has no neighbors");
  auto x = g.feature_row(i);
  std::int64_t similar = 0;
  for (NodeId j : nb)
    if (cosine_sim(x, g.feature_row(j)) > sim_threshold) ++similar;
  return static_cast<double>(similar) / static_cast<double>(nb.size());
}

namespace {

struct RankedCandidate {
  NodeId node;
  double sim;
};

/// Similarity descending, id ascending.
void rank_desc(std::vector<RankedCandidate>& v) {
  std::sort(v.begin(), v.end(), [](const RankedCandidate& a,
                                   const RankedCandidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.node < b.node;
  });
}

/// Similarity ascending, id ascending.
void rank_asc(std::vector<RankedCandidate>& v) {
  std::sort(v.begin(), v.end(), [](const RankedCandidate& a,
                                   const RankedCandidate& b) {
    if (a.sim != b.sim) return a.sim < b.sim;
    return a.node < b.node;
  });
}

}  // namespace

StructCf gen_struct_cf(const AttributedGraph& g, NodeId i, CfMode mode,
                       const CfConfig& cfg, const ConsistencyConfig& ccfg) {
  StructCf out;
  if (g.degree(i) == 0) return out;
  auto x = g.feature_row(i);

  std::vector<RankedCandidate> nbs;
  for (NodeId j : g.neighbors(i))
    nbs.push_back({j, cosine_sim(x, g.feature_row(j))});
  std::vector<RankedCandidate> hops;
  for (NodeId w : two_hop_neighbors(g, i))
    hops.push_back({w, cosine_sim(x, g.feature_row(w))});

  double h = homophily(g, i, nullptr, ccfg.sim_threshold);
  EdgeEditSet edits;
  auto apply_ok = [&](const EdgeEditSet& e) {
    auto eff = effective_neighbors(g, i, &e);
    if (eff.empty()) return false;
    if (std::abs(e.degree_delta()) > cfg.degree_delta_max) return false;
    return true;
  };

  if (mode == CfMode::Positive) {
    // Remove the most similar neighbors while each removal strictly lowers
    // homophily.
    rank_desc(nbs);
    std::size_t next = 0;
    for (int b = 0; b < cfg.edge_budget_remove && next < nbs.size(); ++b) {
      EdgeEditSet trial = edits;
      trial.removes.push_back(nbs[next].node);
      std::sort(trial.removes.begin(), trial.removes.end());
      if (!apply_ok(trial)) break;
      double h2 = homophily(g, i, &trial, ccfg.sim_threshold);
      if (!(h2 < h)) break;
      edits = trial;
      h = h2;
      ++next;
    }
    if (edits.removes.empty()) {
      // No removal works; fall back to connecting the most dissimilar 2-hop
      // candidate.
      rank_asc(hops);
      if (!hops.empty()) {
        EdgeEditSet trial;
        trial.adds.push_back(hops.front().node);
        if (apply_ok(trial) &&
            homophily(g, i, &trial, ccfg.sim_threshold) < h)
          edits = trial;
      }
    }
  } else {
    // Connect the most similar 2-hop candidates while each addition strictly
    // raises homophily.
    rank_desc(hops);
    std::size_t next = 0;
    for (int b = 0; b < cfg.edge_budget_add && next < hops.size(); ++b) {
      EdgeEditSet trial = edits;
      trial.adds.push_back(hops[next].node);
      std::sort(trial.adds.begin(), trial.adds.end());
      if (!apply_ok(trial)) break;
      double h2 = homophily(g, i, &trial, ccfg.sim_threshold);
      if (!(h2 > h)) break;
      edits = trial;
      h = h2;
      ++next;
    }
    if (edits.adds.empty()) {
      // No addition works; drop the single most dissimilar neighbor.
      rank_asc(nbs);
      if (!nbs.empty()) {
        EdgeEditSet trial;
        trial.removes.push_back(nbs.front().node);
        if (apply_ok(trial) &&
            homophily(g, i, &trial, ccfg.sim_threshold) > h)
          edits = trial;
      }
    }
  }

  if (!edits.empty()) {
    out.edits = std::move(edits);
    out.status = CfStatus::Ok;
  }
  return out;
}

CounterfactualPair generate_pair(const AttributedGraph& g, NodeId i,
                                 const CfConfig& cfg,
                                 const ConsistencyConfig& ccfg,
                                 double feature_std_hint) {
  return generate_pair_filtered(g, i, cfg, ccfg, true, true, feature_std_hint);
}

CounterfactualPair generate_pair_filtered(const AttributedGraph& g, NodeId i,
                                          const CfConfig& cfg,
                                          const ConsistencyConfig& ccfg,
                                          bool use_feature_cf,
                                          bool use_struct_cf,
                                          double feature_std_hint) {
  CounterfactualPair pair;
  pair.node = i;
  auto x = g.feature_row(i);
  pair.pos_features.assign(x.begin(), x.end());
  pair.neg_features.assign(x.begin(), x.end());
  if (g.degree(i) == 0) return pair;  // fallback positive, discarded negative

  if (feature_std_hint < 0.0) feature_std_hint = feature_std(g);
  const double c0 = consistency_score(g, i, nullptr, nullptr, ccfg);

  // Positive: combined view first, then feature-only, then edits-only.
  FeatureCf fpos;
  StructCf spos;
  if (use_feature_cf)
    fpos = gen_feature_cf_positive(g, i, cfg, ccfg, feature_std_hint);
  if (use_struct_cf) spos = gen_struct_cf(g, i, CfMode::Positive, cfg, ccfg);
  pair.pos_retries = fpos.retries;
  bool fp = fpos.status == CfStatus::Ok;
  bool sp = spos.status == CfStatus::Ok;
  if (fp && sp &&
      consistency_score(g, i, fpos.features.data(), &spos.edits, ccfg) > c0) {
    pair.pos_features = fpos.features;
    pair.pos_identity = false;
    pair.pos_edits = spos.edits;
    pair.pos_ok = true;
  } else if (fp) {
    pair.pos_features = fpos.features;  // feature-only view verified by gen
    pair.pos_identity = false;
    pair.pos_ok = true;
  } else if (sp &&
             consistency_score(g, i, nullptr, &spos.edits, ccfg) > c0) {
    pair.pos_edits = spos.edits;
    pair.pos_ok = true;
  }

  // Negative: same cascade with the opposite direction; discard on failure.
  FeatureCf fneg;
  StructCf sneg;
  if (use_feature_cf)
    fneg = gen_feature_cf_negative(g, i, cfg, ccfg, feature_std_hint);
  if (use_struct_cf) sneg = gen_struct_cf(g, i, CfMode::Negative, cfg, ccfg);
  pair.neg_retries = fneg.retries;
  bool fn = fneg.status == CfStatus::Ok;
  bool sn = sneg.status == CfStatus::Ok;
  if (fn && sn &&
      consistency_score(g, i, fneg.features.data(), &sneg.edits, ccfg) < c0) {
    pair.neg_features = fneg.features;
    pair.neg_edits = sneg.edits;
    pair.neg_ok = true;
  } else if (fn) {
    pair.neg_features = fneg.features;
    pair.neg_ok = true;
  } else if (sn &&
             consistency_score(g, i, nullptr, &sneg.edits, ccfg) < c0) {
    pair.neg_edits = sneg.edits;
    pair.neg_ok = true;
  }
  return pair;
}

OracleFeatureCf oracle_feature_cf(const AttributedGraph& g, NodeId i,
                                  CfMode mode, const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg, int grid,
                                  int directions, std::uint64_t seed,
                                  double feature_std_hint) {
  OracleFeatureCf out;
  if (g.degree(i) == 0) return out;
  if (feature_std_hint < 0.0) feature_std_hint = feature_std(g);
  const double bound = 0.5 * feature_std_hint;
  const double c0 = consistency_score(g, i, nullptr, nullptr, ccfg);
  auto x = g.feature_row(i);
  auto axis = centroid_axis(g, i, ccfg.delta);

  std::vector<std::vector<double>> dirs;
  {
    double sq = 0.0;
    for (double v : axis.unit) sq += v * v;
    if (sq > 0.0) {
      std::vector<double> u = axis.unit;
      double inv = 1.0 / std::sqrt(sq);
      for (double& v : u) v *= inv;
      dirs.push_back(u);
      for (double& v : u) v = -v;
      dirs.push_back(u);
    }
    Rng rng(derive_seed(seed, "oracle.dirs", static_cast<std::uint64_t>(i)));
    for (int k = 0; k < directions; ++k) {
      std::vector<double> u(static_cast<std::size_t>(g.d));
      double norm_sq = 0.0;
      for (auto& v : u) {
        v = rng.normal();
        norm_sq += v * v;
      }
      if (norm_sq == 0.0) continue;
      double inv = 1.0 / std::sqrt(norm_sq);
      for (double& v : u) v *= inv;
      dirs.push_back(std::move(u));
    }
  }

  std::vector<double> cand(static_cast<std::size_t>(g.d));
  auto consider = [&](const std::vector<double>& c_vec, double norm) {
    if (norm <= 0.0 || norm > bound) return;
    if (out.found && norm >= out.norm) return;
    double c1 = consistency_score(g, i, c_vec.data(), nullptr, ccfg);
    bool ok = mode == CfMode::Positive ? c1 > c0 : c1 < c0;
    if (!ok) return;
    out.features = c_vec;
    out.norm = norm;
    out.found = true;
  };

  for (auto& u : dirs)
    for (int t = 1; t <= grid; ++t) {
      double step = cfg.max_step * static_cast<double>(t) / grid;
      for (int c = 0; c < g.d; ++c) cand[c] = x[c] + step * u[c];
      consider(cand, step);
    }

  // The adaptive-step candidates of the gradient method are part of the
  // search space so that its successes are never missed.
  double target = mode == CfMode::Positive ? cfg.gamma - 1.0 : 1.0 - cfg.beta;
  double alpha = bound > 0.0
                     ? std::min(cfg.max_step, target * axis.dist / bound)
                     : cfg.max_step;
  const double sign = mode == CfMode::Positive ? -1.0 : 1.0;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    double norm_sq = 0.0;
    for (int c = 0; c < g.d; ++c) {
      double step = sign * alpha * axis.unit[c];
      cand[c] = x[c] + step;
      norm_sq += step * step;
    }
    consider(cand, std::sqrt(norm_sq));
    alpha *= 0.5;
  }
  return out;
}

OracleStructCf oracle_struct_cf(const AttributedGraph& g, NodeId i, CfMode mode,
                                const CfConfig& cfg,
                                const ConsistencyConfig& ccfg) {
  OracleStructCf out;
  if (g.degree(i) == 0) return out;
  auto x = g.feature_row(i);
  auto nb = g.neighbors(i);
  auto hops = two_hop_neighbors(g, i);

  // Cache similarity flags so each edit set is evaluated by a recount.
  std::vector<std::uint8_t> nb_sim(nb.size());
  for (std::size_t k = 0; k < nb.size(); ++k)
    nb_sim[k] = cosine_sim(x, g.feature_row(nb[k])) > ccfg.sim_threshold;
  std::vector<std::uint8_t> hop_sim(hops.size());
  for (std::size_t k = 0; k < hops.size(); ++k)
    hop_sim[k] = cosine_sim(x, g.feature_row(hops[k])) > ccfg.sim_threshold;
  std::int64_t total_sim = 0;
  for (auto s : nb_sim) total_sim += s;
  const double h0 =
      static_cast<double>(total_sim) / static_cast<double>(nb.size());

  const int max_rm = mode == CfMode::Positive ? cfg.edge_budget_remove : 1;
  const int max_add = mode == CfMode::Positive ? 1 : cfg.edge_budget_add;

  auto better = [&](const EdgeEditSet& a, const EdgeEditSet& b) {
    if (a.cost() != b.cost()) return a.cost() < b.cost();
    if (a.removes != b.removes) return a.removes < b.removes;
    return a.adds < b.adds;
  };

  // Enumerate removal index subsets (size ≤ max_rm) and addition subsets
  // (size ≤ max_add) over the candidate lists.
  std::vector<std::vector<std::size_t>> rm_sets{{}}, add_sets{{}};
  for (std::size_t a = 0; a < nb.size(); ++a) {
    rm_sets.push_back({a});
    if (max_rm >= 2)
      for (std::size_t b = a + 1; b < nb.size(); ++b) rm_sets.push_back({a, b});
  }
  for (std::size_t a = 0; a < hops.size(); ++a) {
    add_sets.push_back({a});
    if (max_add >= 2)
      for (std::size_t b = a + 1; b < hops.size(); ++b)
        add_sets.push_back({a, b});
  }

  for (auto& rs : rm_sets) {
    std::int64_t sim_rm = 0;
    for (auto k : rs) sim_rm += nb_sim[k];
    for (auto& as : add_sets) {
      if (rs.empty() && as.empty()) continue;
      std::int64_t deg = static_cast<std::int64_t>(nb.size()) -
                         static_cast<std::int64_t>(rs.size()) +
                         static_cast<std::int64_t>(as.size());
      if (deg < 1) continue;
      std::int64_t delta = static_cast<std::int64_t>(as.size()) -
                           static_cast<std::int64_t>(rs.size());
      if (std::abs(delta) > cfg.degree_delta_max) continue;
      std::int64_t sim = total_sim - sim_rm;
      for (auto k : as) sim += hop_sim[k];
      double h = static_cast<double>(sim) / static_cast<double>(deg);
      bool ok = mode == CfMode::Positive ? h < h0 : h > h0;
      if (!ok) continue;
      EdgeEditSet e;
      for (auto k : rs) e.removes.push_back(nb[k]);
      for (auto k : as) e.adds.push_back(hops[k]);
      std::sort(e.removes.begin(), e.removes.end());
      std::sort(e.adds.begin(), e.adds.end());
      if (!out.found || better(e, out.edits)) {
        out.edits = std::move(e);
        out.found = true;
      }
    }
  }
  return out;
}

}  // namespace acgad
