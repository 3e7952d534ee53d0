#include "acgad/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace acgad {

std::vector<double> anomaly_scores(const AttributedGraph& g,
                                   const ModelParams& params) {
  const auto ctx = make_encoder_context(g);
  const auto f = full_forward(ctx, params);
  std::vector<double> scores(static_cast<std::size_t>(g.n));
  for (NodeId i = 0; i < g.n; ++i) {
    const auto nb = g.neighbors(i);
    if (nb.empty()) {
      scores[static_cast<std::size_t>(i)] = f.Z.row(i).norm();
      continue;
    }
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(kEmbedDim);
    for (NodeId j : nb) mean += f.Z.row(j);
    mean /= static_cast<double>(nb.size());
    scores[static_cast<std::size_t>(i)] = (f.Z.row(i) - mean).norm();
  }
  return scores;
}

std::vector<NodeId> rank_by_score(const std::vector<double>& scores) {
  std::vector<NodeId> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return order;
}

double auc_roc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_roc: size mismatch");
  const std::size_t n = scores.size();
  std::int64_t n_pos = 0;
  for (auto l : labels) n_pos += l != 0 ? 1 : 0;
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_roc: both classes required");

  // Rank sum with tie-averaged ranks; halves are exact in binary, so this
  // matches the pairwise count form bit for bit.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) *
                       static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double f1_at_m(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels, std::int64_t m) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("f1_at_m: size mismatch");
  std::int64_t anomalies = 0;
  for (auto l : labels) anomalies += l != 0 ? 1 : 0;
  if (m < 0) m = anomalies;
  if (m <= 0 || m > static_cast<std::int64_t>(scores.size()))
    throw std::invalid_argument("f1_at_m: m outside (0, n]");

  const auto order = rank_by_score(scores);
  std::int64_t tp = 0;
  for (std::int64_t k = 0; k < m; ++k)
    if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] !=
        0)
      ++tp;
  if (tp == 0 || anomalies == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(m);
  const double recall =
      static_cast<double>(tp) / static_cast<double>(anomalies);
  return 2.0 * precision * recall / (precision + recall);
}

AnomalyReport make_report(const AttributedGraph& g, const ModelParams& params,
                          std::int64_t m) {
  AnomalyReport r;
  r.scores = anomaly_scores(g, params);
  r.ranking = rank_by_score(r.scores);

  std::int64_t anomalies = 0;
  if (g.has_labels())
    for (auto l : g.labels) anomalies += l != 0 ? 1 : 0;
  r.m = m >= 0 ? m : std::max<std::int64_t>(anomalies, 1);
  r.m = std::min<std::int64_t>(r.m, g.n);

  r.flagged.assign(r.ranking.begin(),
                   r.ranking.begin() + static_cast<std::ptrdiff_t>(r.m));
  std::sort(r.flagged.begin(), r.flagged.end());

  if (g.has_labels() && anomalies > 0 && anomalies < g.n) {
    r.auc = auc_roc(r.scores, g.labels);
    r.f1 = f1_at_m(r.scores, g.labels, r.m);
  }
  return r;
}

void write_scores_csv(const AnomalyReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<std::int64_t> rank_of(r.scores.size());
  for (std::size_t k = 0; k < r.ranking.size(); ++k)
    rank_of[static_cast<std::size_t>(r.ranking[k])] =
        static_cast<std::int64_t>(k) + 1;
  std::vector<std::uint8_t> is_flagged(r.scores.size(), 0);
  for (NodeId v : r.flagged) is_flagged[static_cast<std::size_t>(v)] = 1;
  out << "node_id,score,rank,flagged\n";
  char buf[64];
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", r.scores[i]);
    out << i << ',' << buf << ',' << rank_of[i] << ','
        << static_cast<int>(is_flagged[i]) << '\n';
  }
}

std::vector<double> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scores file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("node_id,score", 0) != 0)
    throw std::runtime_error(path + ": expected a node_id,score header");
  std::vector<std::pair<std::int64_t, double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long long id = 0;
    double score = 0.0;
    if (std::sscanf(line.c_str(), "%lld,%lf", &id, &score) != 2 || id < 0)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected node_id,score,...");
    rows.emplace_back(static_cast<std::int64_t>(id), score);
  }
  std::vector<double> scores(rows.size(), 0.0);
  std::vector<std::uint8_t> seen(rows.size(), 0);
  for (const auto& [id, score] : rows) {
    if (id >= static_cast<std::int64_t>(rows.size()) || seen[id])
      throw std::runtime_error(path + ": node ids must cover 0.." +
                               std::to_string(rows.size() - 1) + " once each");
    seen[id] = 1;
    scores[id] = score;
  }
  return scores;
}

}  // namespace acgad
