#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "acgad/config.hpp"
#include "acgad/scoring.hpp"

namespace acgad {

// Raised when the input graph directory or a required file is absent; the
// CLI maps it to exit code 2.
struct GraphNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Loads edges.txt + features.csv (+ labels.txt when present) from `dir`.
AttributedGraph load_graph_dir(const std::string& dir);

struct PipelineResult {
  AttributedGraph graph;  // after optional injection and standardization
  SelectedSubset subset;
  TrainResult trained;
  AnomalyReport report;
};

/// In-memory pipeline over an already loaded graph: optional injection,
/// feature standardization, selection, training, scoring. Stage seeds are
/// split off cfg.seed; a failing stage is rethrown with its name prefixed.
PipelineResult run_pipeline_on(const RunConfig& cfg, const AttributedGraph& g);

/// Disk-to-disk pipeline. Writes config.txt, selection.csv, model.ckpt,
/// train_log.csv, scores.csv and metrics.json under out_dir.
PipelineResult run_pipeline(const RunConfig& cfg, const std::string& graph_dir,
                            const std::string& out_dir);

/// metrics.json with the fixed key set auc, f1, m, n, anomalies. Unlabeled
/// graphs carry auc = f1 = -1 and anomalies = 0.
void write_metrics_json(const AnomalyReport& r, std::int64_t n,
                        std::int64_t anomalies, const std::string& path);

// ---- ablations ----------------------------------------------------------

/// Known variant names plus the "k-sweep" alias, which expands to k-2, k-5,
/// k-10, k-15 and k-20 (selection budget as a percentage of n).
std::vector<std::string> expand_variants(const std::vector<std::string>& names);

/// Returns cfg with one named override applied: full (none), random-aug,
/// no-cf-pos, no-cf-neg, no-feature-cf, no-struct-cf, entropy-only,
/// deviation-only, no-uniformity, k-<percent>. Unknown names throw
/// std::invalid_argument.
RunConfig apply_variant(RunConfig cfg, const std::string& variant);

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double auc = -1.0;
  double f1 = -1.0;
  std::int64_t subset_size = 0;
};

/// Runs every variant under every seed (seeds shared across variants so
/// rows are pairwise comparable) on a labeled graph.
std::vector<AblationRow> compare_ablations(
    const RunConfig& base, const AttributedGraph& g,
    const std::vector<std::string>& variants,
    const std::vector<std::uint64_t>& seeds);

/// Per-run rows followed by one "mean" row per variant (seed column = runs).
void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path);

}  // namespace acgad
