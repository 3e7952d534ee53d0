#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acgad/encoder.hpp"
#include "acgad/graph.hpp"

namespace acgad {

// a(i) = || z_i - mean of neighbor embeddings ||_2 over the final normalized
// projection embeddings of the unmodified graph; isolated nodes score their
// own embedding norm.
std::vector<double> anomaly_scores(const AttributedGraph& g,
                                   const ModelParams& params);

// Node ids by descending score, ties broken by ascending id.
std::vector<NodeId> rank_by_score(const std::vector<double>& scores);

// Mann-Whitney AUC: probability that a random anomaly outranks a random
// normal node, ties counted one half. Throws std::invalid_argument when only
// one class is present.
double auc_roc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels);

// F1 of the top-m set (ties by ascending id) against the labels. m < 0 uses
// the true anomaly count; with that default precision equals recall. Throws
// std::invalid_argument for m outside (0, n].
double f1_at_m(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels, std::int64_t m = -1);

struct AnomalyReport {
  std::vector<double> scores;
  std::vector<NodeId> ranking;
  std::vector<NodeId> flagged;  // top-m, ascending id
  std::int64_t m = 0;
  double auc = -1.0;  // -1 when labels are absent
  double f1 = -1.0;
};

// Full report; AUC/F1 filled in only for labeled graphs with both classes.
AnomalyReport make_report(const AttributedGraph& g, const ModelParams& params,
                          std::int64_t m = -1);

void write_scores_csv(const AnomalyReport& r, const std::string& path);

// Reads a scores CSV back; result is indexed by node id. Every id in
// [0, rows) must appear exactly once.
std::vector<double> read_scores_csv(const std::string& path);

}  // namespace acgad
