#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acgad/augment.hpp"
#include "acgad/counterfactual.hpp"
#include "acgad/encoder.hpp"
#include "acgad/graph.hpp"
#include "acgad/train.hpp"

namespace acgad {

// One row of the view-quality comparison table.
struct QualityRow {
  std::string strategy;
  double pos_sim_mean = 0.0;  // cosine(anchor, positive view)
  double pos_sim_std = 0.0;
  double neg_margin_mean = 0.0;  // ||anchor - negative view||, NaN if none
  double neg_margin_std = 0.0;
  std::int64_t margin_count = 0;
  double preservation_mean = 0.0;  // neighborhood Jaccard
  double preservation_std = 0.0;
  double constraint_sat = -1.0;  // verified-move fraction; -1 off the CF row
};

// Jaccard of two sorted node lists; two empty sets count as identical.
double jaccard(const std::vector<NodeId>& a, const std::vector<NodeId>& b);

// Metrics of a generated counterfactual pair set under trained parameters:
// anchors are the unmodified nodes, positives/negatives their edited views.
QualityRow quality_metrics(const AttributedGraph& g, const ModelParams& params,
                           const std::vector<CounterfactualPair>& pairs);

// The same metrics for a baseline strategy. The anchor, positive and
// negative are three independent augmented views of each node (streams 0, 1
// and 2 of `seed`), mirroring two-view contrastive setups; preservation
// compares the anchor view's neighborhood to the positive view's. `nodes`
// restricts the averaged set (default: every node).
QualityRow baseline_quality(const AttributedGraph& g,
                            const ModelParams& params, AugmentStrategy s,
                            std::uint64_t seed,
                            const std::vector<NodeId>* nodes = nullptr);

void write_quality_csv(const std::vector<QualityRow>& rows,
                       const std::string& path);

// ---- approximation audit -------------------------------------------------

struct AuditConfig {
  int subgraphs = 100;
  int max_nodes = 100;
  std::uint64_t seed = 0;
  int threads = 0;
};

// One audited (node, polarity) case: the greedy and enumerated structural
// edits plus the adaptive-step and reference feature searches side by side.
// `node` is the id in the original graph.
struct AuditRow {
  int subgraph = 0;
  NodeId node = -1;
  CfMode mode = CfMode::Positive;
  bool greedy_success = false;
  std::int64_t greedy_cost = 0;
  bool oracle_success = false;
  std::int64_t oracle_cost = 0;
  bool grad_success = false;
  double grad_norm = 0.0;
  bool feat_oracle_success = false;
  double feat_oracle_norm = 0.0;
};

std::vector<AuditRow> audit_rows(const AttributedGraph& g,
                                 const AuditConfig& acfg, const CfConfig& cfg,
                                 const ConsistencyConfig& ccfg);

// Long-format comparison table, one line per (case, method):
// node_id,mode,method,success,cost,ratio. Ratios are greedy/oracle cost and
// gradient/oracle perturbation norm, blank unless both sides succeeded.
void write_audit_rows_csv(const std::vector<AuditRow>& rows,
                          const std::string& path);

// Greedy-vs-oracle comparison pooled over BFS-sampled subgraphs: structural
// cost ratios (greedy cost / enumerated optimum, per node and polarity) and
// feature-route success rates of the adaptive-step method vs its reference
// search.
struct AuditReport {
  std::vector<double> rhos;
  double rho_median = 0.0;
  double rho_mean = 0.0;
  double rho_max = 0.0;
  std::int64_t struct_audited = 0;   // cases with a feasible oracle edit
  std::int64_t greedy_feasible = 0;  // of those, greedy also found one
  std::int64_t feature_audited = 0;
  std::int64_t grad_success = 0;
  std::int64_t oracle_success = 0;
};

AuditReport summarize_audit(const std::vector<AuditRow>& rows);

AuditReport approximation_audit(const AttributedGraph& g,
                                const AuditConfig& acfg, const CfConfig& cfg,
                                const ConsistencyConfig& ccfg);

void write_audit_report(const AuditReport& r, const std::string& path);

// ---- efficiency benchmark ------------------------------------------------

struct EfficiencyConfig {
  int warmup_epochs = 2;
  int measured_epochs = 5;
  std::uint64_t seed = 0;
  int threads = 0;
  std::int64_t k = -1;         // selection budget for the active strategy
  double k_frac = -1.0;
};

struct EfficiencyRow {
  std::string strategy;  // random | full-cf | active-cf
  double seconds_per_epoch = 0.0;
  std::int64_t peak_rss_kb = 0;  // process high-water mark (cumulative)
  double auc = -1.0;             // -1 on unlabeled graphs
  std::int64_t subset_size = 0;
};

// Runs warmup + measured epochs per strategy under identical train settings
// and reports the mean measured epoch wall time. full-cf trains on all of V;
// active-cf on the selected subset; random uses the baseline augmentation.
std::vector<EfficiencyRow> efficiency_bench(const AttributedGraph& g,
                                            const EfficiencyConfig& cfg,
                                            const CfConfig& cf_cfg,
                                            const ConsistencyConfig& ccfg);

void write_efficiency_csv(const std::vector<EfficiencyRow>& rows,
                          const std::string& path);

// VmHWM of the current process in kB, 0 if unavailable.
std::int64_t peak_rss_kb();

}  // namespace acgad
