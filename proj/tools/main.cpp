#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "acgad/pipeline.hpp"
#include "acgad/quality.hpp"
#include "acgad/rng.hpp"
#include "acgad/synthetic.hpp"

namespace fs = std::filesystem;
using namespace acgad;

namespace {

struct CommonArgs {
  std::string graph;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_graph = true) {
  auto* g = cmd->add_option("--graph", a.graph,
                            "graph directory (edges.txt, features.csv)");
  if (need_graph) g->required();
  cmd->add_option("--config", a.config, "key=value config file");
  cmd->add_option("--seed", a.seed, "root seed (overrides the config)")
      ->each([&a](const std::string&) { a.seed_set = true; });
  cmd->add_option("--threads", a.threads, "worker threads, 0 = all cores")
      ->each([&a](const std::string&) { a.threads_set = true; });
}

RunConfig load_run_config(const CommonArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = parse_config_file(a.config);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.threads_set) cfg.threads = a.threads;
  return cfg;
}

// Per-stage seed and thread count pushed into the nested configs the same
// way run_pipeline_on does it, for subcommands that call modules directly.
TrainConfig staged_train_config(const RunConfig& cfg) {
  TrainConfig tc = cfg.train_cfg;
  tc.seed = derive_seed(cfg.seed, "stage.train");
  tc.threads = cfg.threads;
  return tc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Active counterfactual contrastive anomaly detection for attributed "
      "graphs"};
  app.require_subcommand(1);

  // ---- inject ----
  CommonArgs inject_a;
  double inject_ratio = -1.0;
  auto* cmd_inject =
      app.add_subcommand("inject", "plant labeled anomalies into a graph");
  add_common(cmd_inject, inject_a);
  cmd_inject->add_option("--ratio", inject_ratio, "anomalous node fraction");
  cmd_inject->add_option("--out", inject_a.out, "output graph directory")
      ->required();

  // ---- select ----
  CommonArgs select_a;
  double select_k_frac = -1.0;
  std::int64_t select_k = -2;
  auto* cmd_select =
      app.add_subcommand("select", "rank nodes and pick the active subset");
  add_common(cmd_select, select_a);
  cmd_select->add_option("--k-frac", select_k_frac, "budget as fraction of n");
  cmd_select->add_option("--k", select_k, "budget as a node count");
  cmd_select->add_option("--out", select_a.out, "selection CSV path")
      ->required();

  // ---- train ----
  CommonArgs train_a;
  auto* cmd_train =
      app.add_subcommand("train", "train the contrastive encoder");
  add_common(cmd_train, train_a);
  cmd_train->add_option("--out", train_a.out, "output directory")->required();

  // ---- score ----
  CommonArgs score_a;
  std::string score_model;
  auto* cmd_score =
      app.add_subcommand("score", "score nodes under a trained model");
  add_common(cmd_score, score_a);
  cmd_score->add_option("--model", score_model, "checkpoint file")->required();
  cmd_score->add_option("--out", score_a.out, "scores CSV path")->required();

  // ---- evaluate ----
  std::string eval_scores, eval_labels, eval_out;
  auto* cmd_eval =
      app.add_subcommand("evaluate", "compute AUC/F1 from scores + labels");
  cmd_eval->add_option("--scores", eval_scores, "scores CSV")->required();
  cmd_eval->add_option("--labels", eval_labels, "labels file")->required();
  cmd_eval->add_option("--out", eval_out, "metrics JSON path")->required();

  // ---- run ----
  CommonArgs run_a;
  auto* cmd_run = app.add_subcommand("run", "end-to-end pipeline");
  add_common(cmd_run, run_a);
  cmd_run->add_option("--out", run_a.out, "output directory")->required();

  // ---- oracle ----
  CommonArgs oracle_a;
  int oracle_subgraphs = 100;
  int oracle_max_nodes = 100;
  auto* cmd_oracle = app.add_subcommand(
      "oracle", "audit greedy/gradient edits against brute force");
  add_common(cmd_oracle, oracle_a);
  cmd_oracle->add_option("--subgraphs", oracle_subgraphs,
                         "sampled subgraph count");
  cmd_oracle->add_option("--max-nodes", oracle_max_nodes,
                         "subgraph size cap");
  cmd_oracle->add_option("--out", oracle_a.out, "report CSV path")->required();

  // ---- bench-quality ----
  CommonArgs quality_a;
  std::string quality_model;
  int quality_seeds = 10;
  auto* cmd_quality = app.add_subcommand(
      "bench-quality", "view-quality table: counterfactual vs baselines");
  add_common(cmd_quality, quality_a);
  cmd_quality->add_option("--model", quality_model, "checkpoint file")
      ->required();
  cmd_quality->add_option("--seeds", quality_seeds,
                          "baseline augmentation seeds to average");
  cmd_quality->add_option("--out", quality_a.out, "quality CSV path")
      ->required();

  // ---- bench-efficiency ----
  CommonArgs eff_a;
  int eff_warmup = 2, eff_epochs = 5;
  auto* cmd_eff = app.add_subcommand(
      "bench-efficiency", "epoch time / memory / AUC per strategy");
  add_common(cmd_eff, eff_a);
  cmd_eff->add_option("--warmup", eff_warmup, "warmup epochs");
  cmd_eff->add_option("--epochs", eff_epochs, "measured epochs");
  cmd_eff->add_option("--out", eff_a.out, "efficiency CSV path")->required();

  // ---- ablate ----
  CommonArgs ablate_a;
  int ablate_seeds = 5;
  std::vector<std::string> ablate_variants;
  auto* cmd_ablate =
      app.add_subcommand("ablate", "run named config variants side by side");
  add_common(cmd_ablate, ablate_a);
  cmd_ablate->add_option("--seeds", ablate_seeds, "seeds per variant (0..N-1)");
  cmd_ablate
      ->add_option("--variants", ablate_variants,
                   "comma-separated names; default: all plus k-sweep")
      ->delimiter(',');
  cmd_ablate->add_option("--out", ablate_a.out, "ablation CSV path")
      ->required();

  // ---- synth ----
  CommonArgs synth_a;
  SyntheticConfig synth_cfg;
  auto* cmd_synth = app.add_subcommand(
      "synth", "generate a planted-community benchmark graph");
  cmd_synth->add_option("--n", synth_cfg.n, "node count");
  cmd_synth->add_option("--d", synth_cfg.d, "feature dimension");
  cmd_synth->add_option("--communities", synth_cfg.communities,
                        "community count");
  cmd_synth->add_option("--p-in", synth_cfg.p_in, "intra-community edge prob");
  cmd_synth->add_option("--p-out", synth_cfg.p_out,
                        "inter-community edge prob");
  cmd_synth->add_option("--center-scale", synth_cfg.center_scale,
                        "community center magnitude");
  cmd_synth->add_option("--noise-std", synth_cfg.noise_std,
                        "feature noise around the center");
  cmd_synth->add_option("--seed", synth_cfg.seed, "generator seed");
  cmd_synth->add_option("--out", synth_a.out, "output graph directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_inject->parsed()) {
      const RunConfig cfg = load_run_config(inject_a);
      InjectionConfig ic = cfg.inject_cfg;
      if (inject_ratio >= 0.0) ic.ratio = inject_ratio;
      ic.seed = derive_seed(cfg.seed, "stage.inject");
      const AttributedGraph g = load_graph_dir(inject_a.graph);
      const InjectionResult r = inject_anomalies(g, ic);
      save_graph(r.graph, inject_a.out);
      std::printf("injected %zu structural + %zu attribute anomalies into %s\n",
                  r.structural.size(), r.attribute.size(),
                  inject_a.out.c_str());
    } else if (cmd_select->parsed()) {
      const RunConfig cfg = load_run_config(select_a);
      SelectionConfig sc = cfg.select_cfg;
      if (select_k_frac >= 0.0) sc.k_frac = select_k_frac;
      if (select_k != -2) sc.k = select_k;
      const AttributedGraph g =
          zscore_features(load_graph_dir(select_a.graph));
      const SelectedSubset s = select_subset(g, sc);
      write_selection_csv(s, select_a.out);
      std::printf("selected %zu of %lld nodes -> %s\n", s.members.size(),
                  static_cast<long long>(g.n), select_a.out.c_str());
    } else if (cmd_train->parsed()) {
      const RunConfig cfg = load_run_config(train_a);
      const PipelineResult res = run_pipeline_on(
          cfg, load_graph_dir(train_a.graph));
      fs::create_directories(train_a.out);
      const fs::path out(train_a.out);
      save_checkpoint(res.trained.params, (out / "model.ckpt").string());
      write_train_log_csv(res.trained.log, (out / "train_log.csv").string());
      std::ofstream echo(out / "config.txt");
      echo << echo_config(cfg);
      std::printf("trained %d epochs (best %d) -> %s\n",
                  static_cast<int>(res.trained.log.epochs.size()),
                  res.trained.log.best_epoch, train_a.out.c_str());
    } else if (cmd_score->parsed()) {
      const AttributedGraph g = zscore_features(load_graph_dir(score_a.graph));
      const ModelParams params = load_checkpoint(score_model);
      const AnomalyReport r = make_report(g, params);
      write_scores_csv(r, score_a.out);
      std::printf("scored %lld nodes -> %s\n", static_cast<long long>(g.n),
                  score_a.out.c_str());
    } else if (cmd_eval->parsed()) {
      const std::vector<double> scores = read_scores_csv(eval_scores);
      const std::vector<std::uint8_t> labels = read_labels_file(eval_labels);
      if (labels.size() != scores.size())
        throw std::runtime_error("scores and labels disagree on node count");
      std::int64_t anomalies = 0;
      for (auto l : labels) anomalies += l;
      AnomalyReport r;
      r.scores = scores;
      r.ranking = rank_by_score(scores);
      r.m = std::max<std::int64_t>(anomalies, 1);
      if (anomalies > 0 && anomalies < static_cast<std::int64_t>(labels.size())) {
        r.auc = auc_roc(scores, labels);
        r.f1 = f1_at_m(scores, labels, r.m);
      }
      write_metrics_json(r, static_cast<std::int64_t>(scores.size()),
                         anomalies, eval_out);
      std::printf("auc %.4f f1 %.4f -> %s\n", r.auc, r.f1, eval_out.c_str());
    } else if (cmd_run->parsed()) {
      const RunConfig cfg = load_run_config(run_a);
      const PipelineResult res = run_pipeline(cfg, run_a.graph, run_a.out);
      std::printf("n %lld selected %zu auc %.4f f1 %.4f -> %s\n",
                  static_cast<long long>(res.graph.n),
                  res.subset.members.size(), res.report.auc, res.report.f1,
                  run_a.out.c_str());
    } else if (cmd_oracle->parsed()) {
      const RunConfig cfg = load_run_config(oracle_a);
      AuditConfig ac;
      ac.subgraphs = oracle_subgraphs;
      ac.max_nodes = oracle_max_nodes;
      ac.seed = cfg.seed;
      ac.threads = cfg.threads;
      const AttributedGraph g =
          zscore_features(load_graph_dir(oracle_a.graph));
      const auto rows = audit_rows(g, ac, cfg.cf, cfg.consistency);
      write_audit_rows_csv(rows, oracle_a.out);
      const AuditReport rep = summarize_audit(rows);
      std::printf(
          "audited %lld structural cases: rho median %.3f mean %.3f max "
          "%.3f; feature success %lld/%lld vs oracle %lld -> %s\n",
          static_cast<long long>(rep.struct_audited), rep.rho_median,
          rep.rho_mean, rep.rho_max, static_cast<long long>(rep.grad_success),
          static_cast<long long>(rep.feature_audited),
          static_cast<long long>(rep.oracle_success), oracle_a.out.c_str());
    } else if (cmd_quality->parsed()) {
      const RunConfig cfg = load_run_config(quality_a);
      const AttributedGraph g =
          zscore_features(load_graph_dir(quality_a.graph));
      const ModelParams params = load_checkpoint(quality_model);
      std::vector<CounterfactualPair> pairs;
      pairs.reserve(static_cast<std::size_t>(g.n));
      for (NodeId i = 0; i < g.n; ++i)
        pairs.push_back(generate_pair(g, i, cfg.cf, cfg.consistency));
      std::vector<QualityRow> rows{quality_metrics(g, params, pairs)};
      for (AugmentStrategy s :
           {AugmentStrategy::RandomEdgeFeature, AugmentStrategy::DegreeBased,
            AugmentStrategy::FeatureNoise}) {
        // seed-averaged row per baseline strategy
        QualityRow acc;
        for (int k = 0; k < quality_seeds; ++k) {
          const QualityRow r = baseline_quality(
              g, params, s, derive_seed(cfg.seed, "bench.quality", k));
          acc.strategy = r.strategy;
          acc.pos_sim_mean += r.pos_sim_mean;
          acc.pos_sim_std += r.pos_sim_std;
          acc.neg_margin_mean += r.neg_margin_mean;
          acc.neg_margin_std += r.neg_margin_std;
          acc.margin_count += r.margin_count;
          acc.preservation_mean += r.preservation_mean;
          acc.preservation_std += r.preservation_std;
        }
        const double inv = 1.0 / std::max(quality_seeds, 1);
        acc.pos_sim_mean *= inv;
        acc.pos_sim_std *= inv;
        acc.neg_margin_mean *= inv;
        acc.neg_margin_std *= inv;
        acc.preservation_mean *= inv;
        acc.preservation_std *= inv;
        rows.push_back(acc);
      }
      write_quality_csv(rows, quality_a.out);
      std::printf("quality table (%zu strategies) -> %s\n", rows.size(),
                  quality_a.out.c_str());
    } else if (cmd_eff->parsed()) {
      const RunConfig cfg = load_run_config(eff_a);
      EfficiencyConfig ec;
      ec.warmup_epochs = eff_warmup;
      ec.measured_epochs = eff_epochs;
      ec.seed = cfg.seed;
      ec.threads = cfg.threads;
      ec.k = cfg.select_cfg.k;
      ec.k_frac = cfg.select_cfg.k_frac;
      const AttributedGraph g = zscore_features(load_graph_dir(eff_a.graph));
      const auto rows = efficiency_bench(g, ec, cfg.cf, cfg.consistency);
      write_efficiency_csv(rows, eff_a.out);
      for (const auto& r : rows)
        std::printf("%-10s %.4f s/epoch auc %.4f (|S| = %lld)\n",
                    r.strategy.c_str(), r.seconds_per_epoch, r.auc,
                    static_cast<long long>(r.subset_size));
    } else if (cmd_ablate->parsed()) {
      const RunConfig cfg = load_run_config(ablate_a);
      if (ablate_variants.empty())
        ablate_variants = {"full",          "random-aug",   "no-cf-pos",
                           "no-cf-neg",     "no-feature-cf", "no-struct-cf",
                           "entropy-only",  "deviation-only", "no-uniformity",
                           "k-sweep"};
      std::vector<std::uint64_t> seeds;
      for (int s = 0; s < ablate_seeds; ++s)
        seeds.push_back(static_cast<std::uint64_t>(s));
      const AttributedGraph g = load_graph_dir(ablate_a.graph);
      const auto rows = compare_ablations(cfg, g, ablate_variants, seeds);
      write_ablation_csv(rows, ablate_a.out);
      std::printf("%zu ablation runs -> %s\n", rows.size(),
                  ablate_a.out.c_str());
    } else if (cmd_synth->parsed()) {
      const AttributedGraph g = synthetic_graph(synth_cfg);
      save_graph(g, synth_a.out);
      std::printf("synthetic graph n %lld d %d -> %s\n",
                  static_cast<long long>(g.n), g.d, synth_a.out.c_str());
    }
  } catch (const GraphNotFound& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
