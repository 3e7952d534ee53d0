#include "acgad/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>

#include "acgad/rng.hpp"
#include "acgad/scoring.hpp"
#include "acgad/select.hpp"

namespace acgad {

namespace {

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

Eigen::RowVectorXd view_embedding(const EncoderContext& ctx,
                                  const ModelParams& params, NodeId v,
                                  const std::vector<double>& features,
                                  const EdgeEditSet& edits) {
  return local_view_forward(ctx, params, v,
                            features.empty() ? nullptr : features.data(),
                            &edits)
      .z;
}

}  // namespace

double jaccard(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<NodeId> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(uni));
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

QualityRow quality_metrics(const AttributedGraph& g, const ModelParams& params,
                           const std::vector<CounterfactualPair>& pairs) {
  const auto ctx = make_encoder_context(g);
  const auto f = full_forward(ctx, params);

  std::vector<double> sims, margins, jaccards;
  std::int64_t ok = 0;
  for (const auto& pr : pairs) {
    const NodeId v = pr.node;
    const Eigen::RowVectorXd anchor = f.Z.row(v);

    if (pr.pos_identity && pr.pos_edits.empty()) {
      sims.push_back(1.0);  // the positive degenerated to the node itself
    } else {
      const auto zp = view_embedding(ctx, params, v, pr.pos_features,
                                     pr.pos_edits);
      sims.push_back(anchor.dot(zp));
    }
    jaccards.push_back(jaccard(effective_neighbors(g, v, nullptr),
                               effective_neighbors(g, v, &pr.pos_edits)));
    if (pr.neg_ok) {
      const auto zn = view_embedding(ctx, params, v, pr.neg_features,
                                     pr.neg_edits);
      margins.push_back((anchor - zn).norm());
    }
    ok += (pr.pos_ok ? 1 : 0) + (pr.neg_ok ? 1 : 0);
  }

  QualityRow row;
  row.strategy = "counterfactual";
  auto s = mean_std(sims);
  row.pos_sim_mean = s.mean;
  row.pos_sim_std = s.std;
  auto m = mean_std(margins);
  row.neg_margin_mean = m.mean;
  row.neg_margin_std = m.std;
  row.margin_count = static_cast<std::int64_t>(margins.size());
  auto j = mean_std(jaccards);
  row.preservation_mean = j.mean;
  row.preservation_std = j.std;
  row.constraint_sat = pairs.empty()
                           ? 0.0
                           : static_cast<double>(ok) /
                                 (2.0 * static_cast<double>(pairs.size()));
  return row;
}

QualityRow baseline_quality(const AttributedGraph& g,
                            const ModelParams& params, AugmentStrategy s,
                            std::uint64_t seed,
                            const std::vector<NodeId>* nodes) {
  const auto ctx = make_encoder_context(g);
  auto v0 = baseline_augment(g, s, seed, 0);
  auto v1 = baseline_augment(g, s, seed, 1);
  auto v2 = baseline_augment(g, s, seed, 2);

  std::vector<NodeId> all;
  if (!nodes) {
    all.resize(static_cast<std::size_t>(g.n));
    for (NodeId i = 0; i < g.n; ++i) all[static_cast<std::size_t>(i)] = i;
    nodes = &all;
  }
  std::vector<double> sims, margins, jaccards;
  for (NodeId i : *nodes) {
    const auto k = static_cast<std::size_t>(i);
    const auto z0 = view_embedding(ctx, params, i, v0[k].features, v0[k].edits);
    const auto z1 = view_embedding(ctx, params, i, v1[k].features, v1[k].edits);
    const auto z2 = view_embedding(ctx, params, i, v2[k].features, v2[k].edits);
    sims.push_back(z0.dot(z1));
    margins.push_back((z0 - z2).norm());
    jaccards.push_back(jaccard(effective_neighbors(g, i, &v0[k].edits),
                               effective_neighbors(g, i, &v1[k].edits)));
  }

  QualityRow row;
  row.strategy = augment_strategy_name(s);
  auto sm = mean_std(sims);
  row.pos_sim_mean = sm.mean;
  row.pos_sim_std = sm.std;
  auto mm = mean_std(margins);
  row.neg_margin_mean = mm.mean;
  row.neg_margin_std = mm.std;
  row.margin_count = static_cast<std::int64_t>(margins.size());
  auto jm = mean_std(jaccards);
  row.preservation_mean = jm.mean;
  row.preservation_std = jm.std;
  return row;
}

void write_quality_csv(const std::vector<QualityRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "strategy,pos_sim_mean,pos_sim_std,neg_margin_mean,neg_margin_std,"
         "margin_count,preservation_mean,preservation_std,constraint_sat\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.strategy;
    for (double v : {r.pos_sim_mean, r.pos_sim_std, r.neg_margin_mean,
                     r.neg_margin_std}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << ',' << r.margin_count;
    for (double v : {r.preservation_mean, r.preservation_std,
                     r.constraint_sat}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

// ---- approximation audit -------------------------------------------------

namespace {

// First `max_nodes` nodes in BFS order from `start`.
std::vector<NodeId> bfs_sample(const AttributedGraph& g, NodeId start,
                               int max_nodes) {
  std::vector<NodeId> order;
  std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
  std::deque<NodeId> frontier{start};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!frontier.empty() &&
         order.size() < static_cast<std::size_t>(max_nodes)) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    order.push_back(v);
    for (NodeId w : g.neighbors(v)) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        frontier.push_back(w);
      }
    }
  }
  return order;
}

std::vector<AuditRow> audit_one(const AttributedGraph& sub,
                                const std::vector<NodeId>& original_ids,
                                int subgraph_index, const CfConfig& cfg,
                                const ConsistencyConfig& ccfg,
                                std::uint64_t seed) {
  std::vector<AuditRow> rows;
  const double std_hint = feature_std(sub);
  for (NodeId v = 0; v < sub.n; ++v) {
    if (sub.degree(v) == 0) continue;
    for (CfMode mode : {CfMode::Positive, CfMode::Negative}) {
      AuditRow row;
      row.subgraph = subgraph_index;
      row.node = original_ids[static_cast<std::size_t>(v)];
      row.mode = mode;

      const auto oracle = oracle_struct_cf(sub, v, mode, cfg, ccfg);
      row.oracle_success = oracle.found;
      row.oracle_cost = oracle.found ? oracle.edits.cost() : 0;
      const auto greedy = gen_struct_cf(sub, v, mode, cfg, ccfg);
      row.greedy_success = greedy.status != CfStatus::Unchanged;
      row.greedy_cost = row.greedy_success ? greedy.edits.cost() : 0;

      const auto fgrad =
          mode == CfMode::Positive
              ? gen_feature_cf_positive(sub, v, cfg, ccfg, std_hint)
              : gen_feature_cf_negative(sub, v, cfg, ccfg, std_hint);
      row.grad_success = fgrad.status == CfStatus::Ok;
      if (row.grad_success) {
        double sq = 0.0;
        for (int c = 0; c < sub.d; ++c) {
          const double delta =
              fgrad.features[static_cast<std::size_t>(c)] -
              sub.feature_row(v)[static_cast<std::size_t>(c)];
          sq += delta * delta;
        }
        row.grad_norm = std::sqrt(sq);
      }
      const auto foracle = oracle_feature_cf(
          sub, v, mode, cfg, ccfg, 30, 32,
          derive_seed(seed, "audit.dirs", static_cast<std::uint64_t>(v),
                      mode == CfMode::Positive ? 0 : 1),
          std_hint);
      row.feat_oracle_success = foracle.found;
      row.feat_oracle_norm = foracle.found ? foracle.norm : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<AuditRow> audit_rows(const AttributedGraph& g,
                                 const AuditConfig& acfg, const CfConfig& cfg,
                                 const ConsistencyConfig& ccfg) {
  if (acfg.subgraphs < 1 || acfg.max_nodes < 2)
    throw std::invalid_argument("audit: bad sample settings");

  std::vector<std::vector<NodeId>> samples;
  std::vector<AttributedGraph> subs;
  {
    Rng rng(derive_seed(acfg.seed, "audit.start"));
    for (int s = 0; s < acfg.subgraphs; ++s) {
      const auto start =
          static_cast<NodeId>(rng.next_below(static_cast<std::uint64_t>(g.n)));
      samples.push_back(bfs_sample(g, start, acfg.max_nodes));
      subs.push_back(induced_subgraph(g, samples.back()));
    }
  }

  std::vector<std::vector<AuditRow>> partial(subs.size());
  parallel_for(static_cast<std::int64_t>(subs.size()), acfg.threads,
               [&](std::int64_t s) {
                 const auto si = static_cast<std::size_t>(s);
                 partial[si] = audit_one(
                     subs[si], samples[si], static_cast<int>(s), cfg, ccfg,
                     derive_seed(acfg.seed, "audit.sub",
                                 static_cast<std::uint64_t>(s)));
               });

  std::vector<AuditRow> rows;
  for (auto& p : partial)
    rows.insert(rows.end(), std::make_move_iterator(p.begin()),
                std::make_move_iterator(p.end()));
  return rows;
}

AuditReport summarize_audit(const std::vector<AuditRow>& rows) {
  AuditReport r;
  for (const auto& row : rows) {
    ++r.feature_audited;
    if (row.grad_success) ++r.grad_success;
    if (row.feat_oracle_success) ++r.oracle_success;
    if (row.oracle_success) {
      ++r.struct_audited;
      if (row.greedy_success) {
        ++r.greedy_feasible;
        r.rhos.push_back(static_cast<double>(row.greedy_cost) /
                         static_cast<double>(row.oracle_cost));
      }
    }
  }
  if (!r.rhos.empty()) {
    std::vector<double> sorted = r.rhos;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    r.rho_median = n % 2 == 1 ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double m = 0.0;
    for (double x : sorted) m += x;
    r.rho_mean = m / static_cast<double>(n);
    r.rho_max = sorted.back();
  }
  return r;
}

AuditReport approximation_audit(const AttributedGraph& g,
                                const AuditConfig& acfg, const CfConfig& cfg,
                                const ConsistencyConfig& ccfg) {
  return summarize_audit(audit_rows(g, acfg, cfg, ccfg));
}

void write_audit_rows_csv(const std::vector<AuditRow>& rows,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "node_id,mode,method,success,cost,ratio\n";
  char buf[64];
  for (const auto& r : rows) {
    const char* mode = r.mode == CfMode::Positive ? "pos" : "neg";
    out << r.node << ',' << mode << ",struct-greedy," << (r.greedy_success ? 1 : 0)
        << ',' << r.greedy_cost << ',';
    if (r.greedy_success && r.oracle_success) {
      std::snprintf(buf, sizeof buf, "%.6g",
                    static_cast<double>(r.greedy_cost) /
                        static_cast<double>(r.oracle_cost));
      out << buf;
    }
    out << '\n';
    out << r.node << ',' << mode << ",struct-oracle,"
        << (r.oracle_success ? 1 : 0) << ',' << r.oracle_cost << ",\n";
    std::snprintf(buf, sizeof buf, "%.6g", r.grad_norm);
    out << r.node << ',' << mode << ",feature-gradient,"
        << (r.grad_success ? 1 : 0) << ',' << buf << ',';
    if (r.grad_success && r.feat_oracle_success && r.feat_oracle_norm > 0) {
      std::snprintf(buf, sizeof buf, "%.6g",
                    r.grad_norm / r.feat_oracle_norm);
      out << buf;
    }
    out << '\n';
    std::snprintf(buf, sizeof buf, "%.6g", r.feat_oracle_norm);
    out << r.node << ',' << mode << ",feature-oracle,"
        << (r.feat_oracle_success ? 1 : 0) << ',' << buf << ",\n";
  }
}

void write_audit_report(const AuditReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "metric,value\n";
  out << "rho_cases," << r.rhos.size() << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.rho_median);
  out << "rho_median," << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.rho_mean);
  out << "rho_mean," << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.rho_max);
  out << "rho_max," << buf << '\n';
  out << "struct_audited," << r.struct_audited << '\n';
  out << "greedy_feasible," << r.greedy_feasible << '\n';
  out << "feature_audited," << r.feature_audited << '\n';
  out << "grad_success," << r.grad_success << '\n';
  out << "oracle_success," << r.oracle_success << '\n';
}

// ---- efficiency benchmark ------------------------------------------------

std::int64_t peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string key;
  while (in >> key) {
    if (key == "VmHWM:") {
      std::int64_t kb = 0;
      in >> kb;
      return kb;
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return 0;
}

std::vector<EfficiencyRow> efficiency_bench(const AttributedGraph& g,
                                            const EfficiencyConfig& cfg,
                                            const CfConfig& cf_cfg,
                                            const ConsistencyConfig& ccfg) {
  TrainConfig tc;
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  tc.max_epochs = cfg.warmup_epochs + cfg.measured_epochs;
  tc.patience = tc.max_epochs;  // no early stop inside a benchmark

  SelectionConfig sel;
  sel.k = cfg.k;
  sel.k_frac = cfg.k_frac;
  const auto subset = select_subset(g, sel);

  SelectedSubset full;
  full.members.resize(static_cast<std::size_t>(g.n));
  for (NodeId v = 0; v < g.n; ++v)
    full.members[static_cast<std::size_t>(v)] = v;
  full.provenance.assign(full.members.size(), Provenance::Both);
  full.k = g.n;

  struct Job {
    const char* name;
    const SelectedSubset* subset;
    PairOptions opts;
  };
  PairOptions cf_opts;
  PairOptions rand_opts;
  rand_opts.source = PairSource::Baseline;
  const Job jobs[] = {
      {"random", &full, rand_opts},
      {"full-cf", &full, cf_opts},
      {"active-cf", &subset, cf_opts},
  };

  std::vector<EfficiencyRow> rows;
  for (const auto& job : jobs) {
    const auto res = train(g, *job.subset, tc, cf_cfg, ccfg, job.opts);
    double total = 0.0;
    int counted = 0;
    for (std::size_t e = static_cast<std::size_t>(cfg.warmup_epochs);
         e < res.log.epochs.size(); ++e) {
      total += res.log.epochs[e].seconds;
      ++counted;
    }
    EfficiencyRow row;
    row.strategy = job.name;
    row.seconds_per_epoch = counted > 0 ? total / counted : 0.0;
    row.peak_rss_kb = peak_rss_kb();
    row.subset_size = static_cast<std::int64_t>(job.subset->members.size());
    if (g.has_labels()) {
      std::int64_t anomalies = 0;
      for (auto l : g.labels) anomalies += l != 0 ? 1 : 0;
      if (anomalies > 0 && anomalies < g.n)
        row.auc = auc_roc(anomaly_scores(g, res.params), g.labels);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_efficiency_csv(const std::vector<EfficiencyRow>& rows,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "strategy,seconds_per_epoch,peak_rss_kb,auc,subset_size\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.seconds_per_epoch);
    out << r.strategy << ',' << buf << ',' << r.peak_rss_kb;
    std::snprintf(buf, sizeof buf, "%.17g", r.auc);
    out << ',' << buf << ',' << r.subset_size << '\n';
  }
}

}  // namespace acgad
