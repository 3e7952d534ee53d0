#include "acgad/pipeline.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "acgad/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace acgad {

namespace {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const GraphNotFound&) {
    throw;
  } catch (const std::exception& e) {
    const std::string prefix = std::string(name) + ": ";
    const std::string what = e.what();
    throw std::runtime_error(what.rfind(prefix, 0) == 0 ? what : prefix + what);
  }
}

}  // namespace

AttributedGraph load_graph_dir(const std::string& dir) {
  const fs::path root(dir);
  const fs::path edges = root / "edges.txt";
  const fs::path feats = root / "features.csv";
  const fs::path labels = root / "labels.txt";
  if (!fs::is_directory(root) || !fs::exists(edges) || !fs::exists(feats))
    throw GraphNotFound("graph not found");
  return load_graph(edges.string(), feats.string(),
                    fs::exists(labels) ? labels.string() : "");
}

PipelineResult run_pipeline_on(const RunConfig& cfg, const AttributedGraph& g) {
  PipelineResult res;
  res.graph = g;
  if (cfg.inject) {
    stage("inject", [&] {
      InjectionConfig ic = cfg.inject_cfg;
      ic.seed = derive_seed(cfg.seed, "stage.inject");
      res.graph = inject_anomalies(res.graph, ic).graph;
      return 0;
    });
  }
  stage("standardize", [&] {
    res.graph = zscore_features(res.graph);
    return 0;
  });
  stage("select",
        [&] { return res.subset = select_subset(res.graph, cfg.select_cfg); });
  stage("train", [&] {
    TrainConfig tc = cfg.train_cfg;
    tc.seed = derive_seed(cfg.seed, "stage.train");
    tc.threads = cfg.threads;
    return res.trained =
               train(res.graph, res.subset, tc, cfg.cf, cfg.consistency,
                     cfg.pair_opts);
  });
  stage("score",
        [&] { return res.report = make_report(res.graph, res.trained.params); });
  return res;
}

void write_metrics_json(const AnomalyReport& r, std::int64_t n,
                        std::int64_t anomalies, const std::string& path) {
  nlohmann::ordered_json j;
  j["auc"] = r.auc;
  j["f1"] = r.f1;
  j["m"] = r.m;
  j["n"] = n;
  j["anomalies"] = anomalies;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::string& graph_dir,
                            const std::string& out_dir) {
  const AttributedGraph g = stage("load", [&] { return load_graph_dir(graph_dir); });
  PipelineResult res = run_pipeline_on(cfg, g);
  stage("write", [&] {
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    {
      std::ofstream echo(out / "config.txt");
      if (!echo) throw std::runtime_error("cannot write config.txt");
      echo << echo_config(cfg);
    }
    write_selection_csv(res.subset, (out / "selection.csv").string());
    save_checkpoint(res.trained.params, (out / "model.ckpt").string());
    write_train_log_csv(res.trained.log, (out / "train_log.csv").string());
    write_scores_csv(res.report, (out / "scores.csv").string());
    std::int64_t anomalies = 0;
    for (auto l : res.graph.labels) anomalies += l;
    write_metrics_json(res.report, res.graph.n, anomalies,
                       (out / "metrics.json").string());
    return 0;
  });
  return res;
}

std::vector<std::string> expand_variants(
    const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& name : names) {
    if (name == "k-sweep") {
      for (int pct : {2, 5, 10, 15, 20})
        out.push_back("k-" + std::to_string(pct));
    } else {
      out.push_back(name);
    }
  }
  return out;
}

RunConfig apply_variant(RunConfig cfg, const std::string& variant) {
  if (variant == "full") return cfg;
  if (variant == "random-aug") {
    cfg.pair_opts.source = PairSource::Baseline;
    return cfg;
  }
  if (variant == "no-cf-pos") {
    cfg.pair_opts.cf_positive = false;
    return cfg;
  }
  if (variant == "no-cf-neg") {
    cfg.pair_opts.cf_negative = false;
    return cfg;
  }
  if (variant == "no-feature-cf") {
    cfg.pair_opts.feature_cf = false;
    return cfg;
  }
  if (variant == "no-struct-cf") {
    cfg.pair_opts.struct_cf = false;
    return cfg;
  }
  if (variant == "entropy-only") {
    cfg.select_cfg.criterion = SelectionConfig::Criterion::EntropyOnly;
    return cfg;
  }
  if (variant == "deviation-only") {
    cfg.select_cfg.criterion = SelectionConfig::Criterion::DeviationOnly;
    return cfg;
  }
  if (variant == "no-uniformity") {
    cfg.train_cfg.lambda_u = 0.0;
    return cfg;
  }
  if (variant.rfind("k-", 0) == 0) {
    const std::string tail = variant.substr(2);
    std::size_t used = 0;
    int pct = -1;
    try {
      pct = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == tail.size() && pct > 0 && pct <= 100) {
      cfg.select_cfg.k = -1;
      cfg.select_cfg.k_frac = pct / 100.0;
      return cfg;
    }
  }
  throw std::invalid_argument("unknown variant: " + variant);
}

std::vector<AblationRow> compare_ablations(
    const RunConfig& base, const AttributedGraph& g,
    const std::vector<std::string>& variants,
    const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("ablation needs seeds");
  std::vector<AblationRow> rows;
  for (const auto& variant : expand_variants(variants)) {
    RunConfig vcfg = apply_variant(base, variant);
    for (std::uint64_t seed : seeds) {
      vcfg.seed = seed;
      PipelineResult res = run_pipeline_on(vcfg, g);
      rows.push_back({variant, seed, res.report.auc, res.report.f1,
                      static_cast<std::int64_t>(res.subset.members.size())});
    }
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "variant,seed,auc,f1,subset_size\n";
  char buf[256];
  std::vector<std::string> order;  // first-seen variant order
  std::map<std::string, std::array<double, 3>> sums;
  std::map<std::string, int> counts;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.17g,%.17g,%lld\n",
                  r.variant.c_str(), static_cast<unsigned long long>(r.seed),
                  r.auc, r.f1, static_cast<long long>(r.subset_size));
    out << buf;
    if (!counts.count(r.variant)) order.push_back(r.variant);
    auto& s = sums[r.variant];
    s[0] += r.auc;
    s[1] += r.f1;
    s[2] += static_cast<double>(r.subset_size);
    ++counts[r.variant];
  }
  for (const auto& v : order) {
    const auto& s = sums[v];
    const double c = counts[v];
    std::snprintf(buf, sizeof buf, "%s,mean,%.17g,%.17g,%.17g\n", v.c_str(),
                  s[0] / c, s[1] / c, s[2] / c);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace acgad
