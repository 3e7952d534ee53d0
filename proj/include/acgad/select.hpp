#pragma once

#include <cstdint>
#include <vector>

#include "acgad/graph.hpp"

namespace acgad {

/// Active selection: rank every node by topology entropy and by attribute
/// deviation, take the union of the two top-⌈k/2⌉ lists. Runs once, before
/// training.
struct SelectionConfig {
  std::int64_t k = -1;   // explicit budget; -1 means max(100, ⌊0.1·n⌋)
  double k_frac = -1.0;  // explicit fraction of n; overrides the default floor
  int bins = 5;
  enum class Criterion { Dual, EntropyOnly, DeviationOnly };
  Criterion criterion = Criterion::Dual;
};

enum class Provenance : std::uint8_t { Entropy, Deviation, Both };

struct SelectedSubset {
  std::vector<NodeId> members;        // ascending, no duplicates
  std::vector<Provenance> provenance; // parallel to members
  std::vector<double> entropy;        // per node, all n
  std::vector<double> deviation;      // per node, all n
  std::int64_t k = 0;                 // resolved budget
};

/// (B-1) interior cut points of `values` at quantiles j/B, linear
/// interpolation between order statistics.
std::vector<double> quantile_cuts(std::vector<double> values, int bins);

/// Number of cuts strictly below v; a value equal to a cut goes to the lower
/// bin. Result is in [0, |cuts|].
int bin_index(double v, const std::vector<double>& cuts);

/// Shannon entropy (natural log) of a count histogram; empty or all-zero
/// histograms give 0.
double shannon_entropy(const std::vector<std::int64_t>& counts);

/// Mean per-indicator Shannon entropy of the neighborhood of i. Indicators
/// are degree, clustering coefficient and triangle count; each is discretized
/// into `bins` bins cut at graph-wide quantiles. Isolated nodes return 0.
double topology_entropy(const AttributedGraph& g,
                        const StructuralProfile& profile, NodeId i, int bins);

/// ‖x_i − centroid(N(i))‖₂ / (scalar_std(N(i)) + 1e−6); isolated nodes 0.
double attribute_deviation(const AttributedGraph& g, NodeId i);

SelectedSubset select_subset(const AttributedGraph& g,
                             const SelectionConfig& cfg);

/// Fraction of labeled anomalies contained in the subset; 1.0 when the graph
/// has no anomalies. Throws std::invalid_argument on unlabeled graphs.
double anomaly_coverage(const SelectedSubset& s, const AttributedGraph& g);

/// node_id, entropy, deviation, selected, provenance rows for every node.
void write_selection_csv(const SelectedSubset& s, const std::string& path);

}  // namespace acgad
