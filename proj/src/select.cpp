#include "acgad/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace acgad {

namespace {
constexpr double kDeviationEpsilon = 1e-6;
}

std::vector<double> quantile_cuts(std::vector<double> values, int bins) {
  if (bins < 2) throw std::invalid_argument("bins must be at least 2");
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  if (values.empty()) return cuts;
  cuts.reserve(static_cast<std::size_t>(bins) - 1);
  const auto m = static_cast<std::int64_t>(values.size());
  for (int j = 1; j < bins; ++j) {
    double q = static_cast<double>(j) / bins;
    double h = q * static_cast<double>(m - 1);
    auto lo = static_cast<std::int64_t>(std::floor(h));
    auto hi = std::min(lo + 1, m - 1);
    double frac = h - static_cast<double>(lo);
    cuts.push_back(values[lo] + frac * (values[hi] - values[lo]));
  }
  return cuts;
}

int bin_index(double v, const std::vector<double>& cuts) {
  int b = 0;
  for (double c : cuts)
    if (c < v) ++b;
  return b;
}

double shannon_entropy(const std::vector<std::int64_t>& counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c <= 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

namespace {

double indicator_entropy(std::span<const NodeId> nb,
                         const std::vector<double>& values,
                         const std::vector<double>& cuts, int bins) {
  std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
  for (NodeId j : nb) ++hist[static_cast<std::size_t>(bin_index(values[j], cuts))];
  return shannon_entropy(hist);
}

struct IndicatorTable {
  std::vector<double> values;
  std::vector<double> cuts;
};

std::vector<IndicatorTable> indicator_tables(const StructuralProfile& profile,
                                             int bins) {
  std::vector<IndicatorTable> t(3);
  auto n = profile.degree.size();
  t[0].values.resize(n);
  t[1].values.resize(n);
  t[2].values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[0].values[i] = static_cast<double>(profile.degree[i]);
    t[1].values[i] = profile.clustering[i];
    t[2].values[i] = static_cast<double>(profile.triangles[i]);
  }
  for (auto& tab : t) tab.cuts = quantile_cuts(tab.values, bins);
  return t;
}

}  // namespace

double topology_entropy(const AttributedGraph& g,
                        const StructuralProfile& profile, NodeId i, int bins) {
  auto nb = g.neighbors(i);
  if (nb.empty()) return 0.0;
  auto tables = indicator_tables(profile, bins);
  double sum = 0.0;
  for (auto& tab : tables)
    sum += indicator_entropy(nb, tab.values, tab.cuts, bins);
  return sum / static_cast<double>(tables.size());
}

double attribute_deviation(const AttributedGraph& g, NodeId i) {
  if (g.degree(i) == 0) return 0.0;
  auto stats = neighbor_stats(g, i);
  auto x = g.feature_row(i);
  double sq = 0.0;
  for (int c = 0; c < g.d; ++c) {
    double dv = x[c] - stats.centroid[c];
    sq += dv * dv;
  }
  return std::sqrt(sq) / (stats.scalar_std + kDeviationEpsilon);
}

namespace {

/// Ids ordered by score descending, ascending id on ties.
std::vector<NodeId> ranking(const std::vector<double>& score) {
  std::vector<NodeId> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return order;
}

}  // namespace

SelectedSubset select_subset(const AttributedGraph& g,
                             const SelectionConfig& cfg) {
  SelectedSubset out;
  std::int64_t k;
  if (cfg.k >= 0)
    k = cfg.k;
  else if (cfg.k_frac >= 0.0)
    k = static_cast<std::int64_t>(std::floor(cfg.k_frac * g.n));
  else
    k = std::max<std::int64_t>(100, g.n / 10);
  k = std::clamp<std::int64_t>(k, 1, g.n);
  out.k = k;

  auto profile = structural_profile(g);
  auto tables = indicator_tables(profile, cfg.bins);
  out.entropy.resize(g.n);
  out.deviation.resize(g.n);
  for (NodeId i = 0; i < g.n; ++i) {
    auto nb = g.neighbors(i);
    double sum = 0.0;
    if (!nb.empty())
      for (auto& tab : tables)
        sum += indicator_entropy(nb, tab.values, tab.cuts, cfg.bins);
    out.entropy[i] = sum / 3.0;
    out.deviation[i] = attribute_deviation(g, i);
  }

  std::vector<std::uint8_t> by_entropy(g.n, 0), by_deviation(g.n, 0);
  auto take = [&](const std::vector<double>& score, std::int64_t t,
                  std::vector<std::uint8_t>& mark) {
    auto order = ranking(score);
    for (std::int64_t r = 0; r < t && r < g.n; ++r) mark[order[r]] = 1;
  };
  using C = SelectionConfig::Criterion;
  std::int64_t half = (k + 1) / 2;
  if (cfg.criterion == C::Dual) {
    take(out.entropy, half, by_entropy);
    take(out.deviation, half, by_deviation);
  } else if (cfg.criterion == C::EntropyOnly) {
    take(out.entropy, k, by_entropy);
  } else {
    take(out.deviation, k, by_deviation);
  }

  for (NodeId i = 0; i < g.n; ++i) {
    if (!by_entropy[i] && !by_deviation[i]) continue;
    out.members.push_back(i);
    out.provenance.push_back(by_entropy[i] && by_deviation[i]
                                 ? Provenance::Both
                                 : (by_entropy[i] ? Provenance::Entropy
                                                  : Provenance::Deviation));
  }
  return out;
}

double anomaly_coverage(const SelectedSubset& s, const AttributedGraph& g) {
  if (!g.has_labels())
    throw std::invalid_argument("anomaly_coverage requires a labeled graph");
  std::int64_t anomalies = 0, covered = 0;
  std::vector<std::uint8_t> in_s(g.n, 0);
  for (NodeId v : s.members) in_s[v] = 1;
  for (NodeId v = 0; v < g.n; ++v) {
    if (!g.labels[v]) continue;
    ++anomalies;
    covered += in_s[v];
  }
  if (anomalies == 0) return 1.0;
  return static_cast<double>(covered) / static_cast<double>(anomalies);
}

void write_selection_csv(const SelectedSubset& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto n = static_cast<NodeId>(s.entropy.size());
  std::vector<const char*> tag(static_cast<std::size_t>(n), "");
  std::vector<std::uint8_t> picked(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < s.members.size(); ++k) {
    picked[static_cast<std::size_t>(s.members[k])] = 1;
    switch (s.provenance[k]) {
      case Provenance::Entropy: tag[static_cast<std::size_t>(s.members[k])] = "entropy"; break;
      case Provenance::Deviation: tag[static_cast<std::size_t>(s.members[k])] = "deviation"; break;
      case Provenance::Both: tag[static_cast<std::size_t>(s.members[k])] = "both"; break;
    }
  }
  out << "node_id,entropy,deviation,selected,provenance\n";
  char buf[128];
  for (NodeId i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%d,%s\n",
                  static_cast<long long>(i), s.entropy[static_cast<std::size_t>(i)],
                  s.deviation[static_cast<std::size_t>(i)],
                  static_cast<int>(picked[static_cast<std::size_t>(i)]),
                  tag[static_cast<std::size_t>(i)]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace acgad
