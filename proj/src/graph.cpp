#include "acgad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace acgad {

bool AttributedGraph::has_edge(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

AttributedGraph build_graph(NodeId n, int d,
                            const std::vector<std::pair<NodeId, NodeId>>& edges,
                            std::vector<double> features,
                            std::vector<std::uint8_t> labels,
                            BuildStats* stats) {
  if (n < 0 || d < 0) throw std::invalid_argument("negative graph dimensions");
  if (features.size() != static_cast<std::size_t>(n) * d)
    throw std::invalid_argument("feature vector size does not match n*d");
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("label vector size does not match n");

  BuildStats local;
  std::vector<std::pair<NodeId, NodeId>> dir;
  dir.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("node id out of range");
    if (u == v) {
      ++local.self_loops_dropped;
      continue;
    }
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  auto last = std::unique(dir.begin(), dir.end());
  // Both directions of a duplicate collapse, so halve the removed count.
  local.duplicate_edges_dropped = (dir.end() - last) / 2;
  dir.erase(last, dir.end());

  AttributedGraph g;
  g.n = n;
  g.d = d;
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (auto& [u, v] : dir) ++g.row_ptr[static_cast<std::size_t>(u) + 1];
  for (NodeId i = 0; i < n; ++i)
    g.row_ptr[static_cast<std::size_t>(i) + 1] +=
        g.row_ptr[static_cast<std::size_t>(i)];
  g.col.resize(dir.size());
  {
    std::vector<std::int64_t> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
    for (auto& [u, v] : dir) g.col[cursor[static_cast<std::size_t>(u)]++] = v;
  }
  if (stats) *stats = local;
  return g;
}

namespace {

double parse_double(const std::string& tok, const std::string& file, int line) {
  std::size_t pos = 0;
  double val = 0.0;
  try {
    val = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(file + ":" + std::to_string(line) +
                             ": non-numeric value '" + tok + "'");
  }
  while (pos < tok.size() &&
         (tok[pos] == ' ' || tok[pos] == '\t' || tok[pos] == '\r'))
    ++pos;
  if (pos != tok.size())
    throw std::runtime_error(file + ":" + std::to_string(line) +
                             ": non-numeric value '" + tok + "'");
  return val;
}

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  return s;
}

}  // namespace

AttributedGraph load_graph(const std::string& edge_path,
                           const std::string& feature_path,
                           const std::string& label_path, BuildStats* stats) {
  std::ifstream ff(feature_path);
  if (!ff) throw std::runtime_error("cannot open feature file: " + feature_path);
  std::vector<double> feats;
  int d = -1;
  int line_no = 0;
  std::string line;
  while (std::getline(ff, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    int cols = 0;
    while (std::getline(ss, tok, ',')) {
      feats.push_back(parse_double(tok, feature_path, line_no));
      ++cols;
    }
    if (d < 0)
      d = cols;
    else if (cols != d)
      throw std::runtime_error(feature_path + ":" + std::to_string(line_no) +
                               ": ragged row (expected " + std::to_string(d) +
                               " columns, got " + std::to_string(cols) + ")");
  }
  if (d <= 0) throw std::runtime_error("feature file is empty: " + feature_path);
  NodeId n = static_cast<NodeId>(feats.size() / static_cast<std::size_t>(d));

  std::ifstream ef(edge_path);
  if (!ef) throw std::runtime_error("cannot open edge file: " + edge_path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  line_no = 0;
  while (std::getline(ef, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    long long u, v;
    if (!(ss >> u >> v))
      throw std::runtime_error(edge_path + ":" + std::to_string(line_no) +
                               ": expected 'u v' pair");
    std::string rest;
    if (ss >> rest)
      throw std::runtime_error(edge_path + ":" + std::to_string(line_no) +
                               ": trailing tokens after edge pair");
    if (u < 0 || v < 0)
      throw std::runtime_error(edge_path + ":" + std::to_string(line_no) +
                               ": node id out of range");
    if (u >= n || v >= n)
      throw std::runtime_error(
          edge_path + ":" + std::to_string(line_no) +
          ": row count mismatch (edge references node " +
          std::to_string(std::max(u, v)) + " but feature file has " +
          std::to_string(n) + " rows)");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }

  std::vector<std::uint8_t> labels;
  if (!label_path.empty()) {
    std::ifstream lf(label_path);
    if (!lf) throw std::runtime_error("cannot open label file: " + label_path);
    line_no = 0;
    while (std::getline(lf, line)) {
      ++line_no;
      line = strip_cr(line);
      if (line.empty()) continue;
      if (line != "0" && line != "1")
        throw std::runtime_error(label_path + ":" + std::to_string(line_no) +
                                 ": label must be 0 or 1, got '" + line + "'");
      labels.push_back(line == "1" ? 1 : 0);
    }
    if (labels.size() != static_cast<std::size_t>(n))
      throw std::runtime_error(label_path + ": row count mismatch (" +
                               std::to_string(labels.size()) + " labels for " +
                               std::to_string(n) + " nodes)");
  }
  return build_graph(n, d, edges, std::move(feats), std::move(labels), stats);
}

void save_graph(const AttributedGraph& g, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream ef(dir + "/edges.txt");
    if (!ef) throw std::runtime_error("cannot write " + dir + "/edges.txt");
    for (NodeId i = 0; i < g.n; ++i)
      for (NodeId j : g.neighbors(i))
        if (i < j) ef << i << " " << j << "\n";
  }
  {
    std::ofstream ff(dir + "/features.csv");
    if (!ff) throw std::runtime_error("cannot write " + dir + "/features.csv");
    char buf[64];
    for (NodeId i = 0; i < g.n; ++i) {
      auto row = g.feature_row(i);
      for (int c = 0; c < g.d; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", row[c]);
        ff << (c ? "," : "") << buf;
      }
      ff << "\n";
    }
  }
  if (g.has_labels()) {
    std::ofstream lf(dir + "/labels.txt");
    if (!lf) throw std::runtime_error("cannot write " + dir + "/labels.txt");
    for (NodeId i = 0; i < g.n; ++i) lf << int(g.labels[i]) << "\n";
  }
}

AttributedGraph zscore_features(const AttributedGraph& g) {
  AttributedGraph out = g;
  for (int c = 0; c < g.d; ++c) {
    double mean = 0.0;
    for (NodeId i = 0; i < g.n; ++i)
      mean += g.features[static_cast<std::size_t>(i) * g.d + c];
    mean /= std::max<NodeId>(g.n, 1);
    double var = 0.0;
    for (NodeId i = 0; i < g.n; ++i) {
      double dv = g.features[static_cast<std::size_t>(i) * g.d + c] - mean;
      var += dv * dv;
    }
    var /= std::max<NodeId>(g.n, 1);
    double sd = std::sqrt(var);
    for (NodeId i = 0; i < g.n; ++i) {
      auto& x = out.features[static_cast<std::size_t>(i) * g.d + c];
      x = sd > 0.0 ? (x - mean) / sd : 0.0;
    }
  }
  return out;
}

std::vector<std::uint8_t> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  std::vector<std::uint8_t> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line != "0" && line != "1")
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": label must be 0 or 1, got '" + line + "'");
    labels.push_back(line == "1" ? 1 : 0);
  }
  return labels;
}

StructuralProfile structural_profile(const AttributedGraph& g) {
  StructuralProfile p;
  p.degree.resize(g.n);
  p.triangles.assign(g.n, 0);
  p.clustering.assign(g.n, 0.0);
  for (NodeId i = 0; i < g.n; ++i) p.degree[i] = g.degree(i);
  for (NodeId i = 0; i < g.n; ++i) {
    auto ni = g.neighbors(i);
    std::int64_t paths = 0;  // ordered wedge endpoints that are adjacent
    for (NodeId j : ni) {
      auto nj = g.neighbors(j);
      // |N(i) ∩ N(j)| by merge over sorted lists.
      std::size_t a = 0, b = 0;
      while (a < ni.size() && b < nj.size()) {
        if (ni[a] < nj[b])
          ++a;
        else if (ni[a] > nj[b])
          ++b;
        else {
          ++paths;
          ++a;
          ++b;
        }
      }
    }
    p.triangles[i] = paths / 2;  // each triangle counted for both neighbors
    std::int64_t deg = p.degree[i];
    if (deg >= 2)
      p.clustering[i] =
          2.0 * static_cast<double>(p.triangles[i]) / (deg * (deg - 1.0));
  }
  return p;
}

NeighborStats neighbor_stats(const AttributedGraph& g, NodeId i) {
  auto nb = g.neighbors(i);
  if (nb.empty()) throw std::invalid_argument("node has no neighbors");
  NeighborStats s;
  s.centroid.assign(g.d, 0.0);
  for (NodeId j : nb) {
    auto row = g.feature_row(j);
    for (int c = 0; c < g.d; ++c) s.centroid[c] += row[c];
  }
  for (double& v : s.centroid) v /= static_cast<double>(nb.size());
  // Scalar spread: population std over every entry of every neighbor row,
  // around the global mean of those entries.
  double mean = 0.0;
  for (NodeId j : nb)
    for (double v : g.feature_row(j)) mean += v;
  std::int64_t cnt = static_cast<std::int64_t>(nb.size()) * g.d;
  mean /= static_cast<double>(cnt);
  double var = 0.0;
  for (NodeId j : nb)
    for (double v : g.feature_row(j)) var += (v - mean) * (v - mean);
  s.scalar_std = std::sqrt(var / static_cast<double>(cnt));
  return s;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<NodeId> two_hop_neighbors(const AttributedGraph& g, NodeId i) {
  std::vector<NodeId> out;
  auto ni = g.neighbors(i);
  for (NodeId j : ni)
    for (NodeId u : g.neighbors(j)) {
      if (u == i) continue;
      if (std::binary_search(ni.begin(), ni.end(), u)) continue;
      out.push_back(u);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double feature_std(const AttributedGraph& g) {
  if (g.features.empty()) return 0.0;
  double mean = 0.0;
  for (double v : g.features) mean += v;
  mean /= static_cast<double>(g.features.size());
  double var = 0.0;
  for (double v : g.features) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(g.features.size()));
}

AttributedGraph induced_subgraph(const AttributedGraph& g,
                                 std::vector<NodeId> nodes) {
  std::vector<NodeId> inv(g.n, -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    NodeId v = nodes[k];
    if (v < 0 || v >= g.n) throw std::invalid_argument("node id out of range");
    if (inv[v] >= 0) throw std::invalid_argument("duplicate node in subgraph");
    inv[v] = static_cast<NodeId>(k);
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<double> feats;
  std::vector<std::uint8_t> labels;
  feats.reserve(nodes.size() * static_cast<std::size_t>(g.d));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    NodeId v = nodes[k];
    for (NodeId u : g.neighbors(v))
      if (inv[u] >= 0 && v < u)
        edges.emplace_back(static_cast<NodeId>(k), inv[u]);
    auto row = g.feature_row(v);
    feats.insert(feats.end(), row.begin(), row.end());
    if (g.has_labels()) labels.push_back(g.labels[v]);
  }
  return build_graph(static_cast<NodeId>(nodes.size()), g.d, edges,
                     std::move(feats), std::move(labels));
}

}  // namespace acgad
