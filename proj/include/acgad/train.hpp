#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acgad/augment.hpp"
#include "acgad/counterfactual.hpp"
#include "acgad/encoder.hpp"
#include "acgad/graph.hpp"
#include "acgad/select.hpp"

namespace acgad {

struct TrainConfig {
  double tau = 0.1;
  double lambda_u = -1.0;  // negative: resolved from edge density
  int max_epochs = 200;
  int patience = 20;
  int batch_size = 512;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  double lr = 0.001;
  double weight_decay = 5e-4;
  int threads = 0;  // 0: hardware concurrency
};

// 0.05 on denser graphs (|E|/|V| >= 3), 0.1 otherwise; an explicit
// non-negative request passes through.
double resolve_lambda_u(const AttributedGraph& g, double requested);

enum class PairSource { Counterfactual, Baseline };

// Ablation switches for how contrastive views are produced.
struct PairOptions {
  PairSource source = PairSource::Counterfactual;
  bool cf_positive = true;  // false: the positive view is the node itself
  bool cf_negative = true;  // false: drop the counterfactual negative term
  bool feature_cf = true;
  bool struct_cf = true;
  AugmentStrategy baseline = AugmentStrategy::RandomEdgeFeature;
};

// A contrastive view of one node: either the node as-is or a perturbed
// (features, incident edges) override of it.
struct NodeView {
  bool identity = true;
  std::vector<double> features;
  EdgeEditSet edits;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double contrastive = 0.0;
  double uniform = 0.0;
  int cf_pos_ok = 0;
  int cf_neg_ok = 0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

struct BatchTerms {
  double total = 0.0;
  double contrastive = 0.0;
  double uniform = 0.0;
};

// One batch of the combined objective: InfoNCE over (anchor, positive view,
// optional negative view) plus lambda_u times the uniformity of the anchor
// embeddings. Pass grads to also accumulate parameter gradients through the
// full and per-view forward paths.
BatchTerms batch_loss_and_grads(const EncoderContext& ctx,
                                const ModelParams& params,
                                const std::vector<NodeId>& nodes,
                                const std::vector<NodeView>& pos,
                                const std::vector<NodeView>& neg,
                                const std::vector<char>& has_neg, double tau,
                                double lambda_u, ParamGrads* grads);

// Index-parallel loop; every index is processed exactly once and results
// must be written to per-index slots, keeping output order-independent.
void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t)>& fn);

TrainResult train(const AttributedGraph& g, const SelectedSubset& subset,
                  const TrainConfig& cfg, const CfConfig& cf_cfg,
                  const ConsistencyConfig& ccfg, const PairOptions& opts = {});

void write_train_log_csv(const TrainLog& log, const std::string& path);

}  // namespace acgad
