#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace acgad {

using NodeId = std::int32_t;

/// Undirected attributed graph in CSR form. The adjacency is stored
/// symmetrically with sorted, deduplicated neighbor lists and no self-loops.
/// Features are row-major n x d. Treated as immutable once built; edits are
/// expressed as new graphs or as edit overlays (see counterfactual.hpp).
struct AttributedGraph {
  NodeId n = 0;
  int d = 0;
  std::vector<std::int64_t> row_ptr;  // size n + 1
  std::vector<NodeId> col;            // both directions of every edge
  std::vector<double> features;       // n * d
  std::vector<std::uint8_t> labels;   // empty, or one 0/1 flag per node

  bool has_labels() const { return !labels.empty(); }
  std::int64_t degree(NodeId i) const { return row_ptr[i + 1] - row_ptr[i]; }
  std::int64_t undirected_edge_count() const {
    return static_cast<std::int64_t>(col.size()) / 2;
  }
  std::span<const NodeId> neighbors(NodeId i) const {
    return {col.data() + row_ptr[i], static_cast<std::size_t>(degree(i))};
  }
  std::span<const double> feature_row(NodeId i) const {
    return {features.data() + static_cast<std::size_t>(i) * d,
            static_cast<std::size_t>(d)};
  }
  bool has_edge(NodeId i, NodeId j) const;
};

struct BuildStats {
  std::int64_t self_loops_dropped = 0;
  std::int64_t duplicate_edges_dropped = 0;
};

/// Builds the CSR representation from an arbitrary edge list. Self-loops and
/// duplicate edges are dropped (counted in `stats` when given); each surviving
/// edge is stored in both directions. Throws std::invalid_argument on ids
/// outside [0, n) or wrongly sized feature/label vectors.
AttributedGraph build_graph(NodeId n, int d,
                            const std::vector<std::pair<NodeId, NodeId>>& edges,
                            std::vector<double> features,
                            std::vector<std::uint8_t> labels = {},
                            BuildStats* stats = nullptr);

/// Loads a graph from the on-disk layout: `edges.txt` with one "u v" pair per
/// line, `features.csv` with one comma-separated row per node (row count
/// defines n), and optionally `labels.txt` with one 0/1 per line. Node count
/// is taken from the feature file; an edge endpoint at or beyond it is a row
/// count mismatch. Throws std::runtime_error naming the offending file/line.
AttributedGraph load_graph(const std::string& edge_path,
                           const std::string& feature_path,
                           const std::string& label_path = "",
                           BuildStats* stats = nullptr);

/// Writes edges.txt / features.csv (+ labels.txt when labeled) under `dir`,
/// creating it if needed. Edges are written once with u < v; floats use
/// round-trip precision so a reload is bit-identical.
void save_graph(const AttributedGraph& g, const std::string& dir);

/// Per-column standardization of features: (x - mean) / std with population
/// std. Zero-variance columns map to all zeros. Adjacency is shared.
AttributedGraph zscore_features(const AttributedGraph& g);

/// Standalone labels.txt reader: one 0/1 per line, blank lines skipped.
std::vector<std::uint8_t> read_labels_file(const std::string& path);

struct StructuralProfile {
  std::vector<std::int64_t> degree;
  std::vector<std::int64_t> triangles;   // triangles through each node
  std::vector<double> clustering;        // local clustering coefficient
};

/// Degree, per-node triangle participation and local clustering coefficient.
/// Triangle counts come from sorted neighbor-list intersections. Nodes with
/// degree < 2 have clustering 0.
StructuralProfile structural_profile(const AttributedGraph& g);

struct NeighborStats {
  std::vector<double> centroid;  // mean feature vector over the neighborhood
  double scalar_std = 0.0;       // population std over all neighbor entries
};

/// Mean and scalar spread of the feature rows of N(i). Throws
/// std::invalid_argument("node has no neighbors") for isolated nodes.
NeighborStats neighbor_stats(const AttributedGraph& g, NodeId i);

/// Cosine similarity with zero-vector guard: returns 0 if either norm is 0.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Sorted nodes at exactly distance 2 from i (excludes i and N(i)).
std::vector<NodeId> two_hop_neighbors(const AttributedGraph& g, NodeId i);

/// Population standard deviation over all n*d feature entries.
double feature_std(const AttributedGraph& g);

/// Subgraph induced by `nodes` (need not be sorted; duplicates rejected).
/// Node k of the result is nodes[k]; labels carry over when present.
AttributedGraph induced_subgraph(const AttributedGraph& g,
                                 std::vector<NodeId> nodes);

}  // namespace acgad
