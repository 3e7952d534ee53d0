#pragma once

#include <cstdint>
#include <vector>

#include "acgad/graph.hpp"

namespace acgad {

/// Weights and thresholds of the node consistency score: a weighted sum of
/// attribute deviation and structural misalignment.
struct ConsistencyConfig {
  double lambda_attr = 0.8;
  double lambda_struct = 0.2;
  double sim_threshold = 0.7;  // cosine similarity cutoff for "similar"
  double delta = 1e-6;
};

/// Knobs of counterfactual generation: adaptive feature step bounds and the
/// structural edit budgets.
struct CfConfig {
  double gamma = 1.3;      // positive amplification target
  double beta = 0.7;       // negative normalization target
  double max_step = 0.3;   // cap on the adaptive step size
  int max_retries = 5;     // step halvings before giving up
  int edge_budget_remove = 2;
  int edge_budget_add = 2;
  int degree_delta_max = 2;
};

enum class CfStatus : std::uint8_t { Ok, Fallback, Discarded, Unchanged };
enum class CfMode : std::uint8_t { Positive, Negative };

/// Edits to the edge set incident to one node. `removes` lists current
/// neighbors to disconnect, `adds` non-neighbors to connect; both ascending.
struct EdgeEditSet {
  std::vector<NodeId> removes;
  std::vector<NodeId> adds;

  bool empty() const { return removes.empty() && adds.empty(); }
  std::int64_t cost() const {
    return static_cast<std::int64_t>(removes.size() + adds.size());
  }
  std::int64_t degree_delta() const {
    return static_cast<std::int64_t>(adds.size()) -
           static_cast<std::int64_t>(removes.size());
  }
};

/// Sorted neighbor list of i after applying `edits` (nullptr = none).
std::vector<NodeId> effective_neighbors(const AttributedGraph& g, NodeId i,
                                        const EdgeEditSet* edits);

/// Consistency score c(i): lambda_attr * ||x_i - centroid(N)|| / (std(N) + δ)
/// + lambda_struct * (1 - |N_sim|/|N|), evaluated under the effective view.
/// `features_override` (length d) replaces the node's own feature row;
/// `edits` replaces its incident edges. Neighbor rows are never overridden.
/// Throws std::domain_error("undefined consistency") at effective degree 0.
double consistency_score(const AttributedGraph& g, NodeId i,
                         const double* features_override,
                         const EdgeEditSet* edits,
                         const ConsistencyConfig& ccfg);

struct FeatureCf {
  std::vector<double> features;  // original row when status != Ok
  CfStatus status = CfStatus::Fallback;
  int retries = 0;
};

/// Feature counterfactuals along the centroid axis with an adaptive step and
/// halve-and-retry verification. The positive moves away from the neighbor
/// centroid and falls back to the original row on exhaustion; the negative
/// moves toward it and is discarded on exhaustion. Accepted outputs strictly
/// move the consistency score in the required direction and stay within the
/// perturbation bound 0.5 * std(X). `feature_std_hint` forwards a precomputed
/// std(X) (pass a negative value to have it computed).
FeatureCf gen_feature_cf_positive(const AttributedGraph& g, NodeId i,
                                  const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg,
                                  double feature_std_hint = -1.0);
FeatureCf gen_feature_cf_negative(const AttributedGraph& g, NodeId i,
                                  const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg,
                                  double feature_std_hint = -1.0);

/// Fraction of effective neighbors with cos(x_i, x_j) > threshold.
/// Throws std::domain_error at effective degree 0.
double homophily(const AttributedGraph& g, NodeId i, const EdgeEditSet* edits,
                 double sim_threshold);

struct StructCf {
  EdgeEditSet edits;
  CfStatus status = CfStatus::Unchanged;
};

/// Greedy structural counterfactual. Positive mode removes up to
/// edge_budget_remove edges to the most similar neighbors (each removal must
/// strictly decrease homophily) and, only when no removal is possible, adds
/// one edge to the most dissimilar 2-hop candidate. Negative mode mirrors
/// this: adds up to edge_budget_add edges to the most similar 2-hop
/// candidates, else removes one most-dissimilar edge. Degree change is
/// bounded by degree_delta_max and the node is never isolated.
StructCf gen_struct_cf(const AttributedGraph& g, NodeId i, CfMode mode,
                       const CfConfig& cfg, const ConsistencyConfig& ccfg);

struct CounterfactualPair {
  NodeId node = -1;
  std::vector<double> pos_features;  // equals the original row if pos_identity
  std::vector<double> neg_features;
  EdgeEditSet pos_edits;
  EdgeEditSet neg_edits;
  bool pos_identity = true;  // feature part of the positive is the original
  bool pos_ok = false;       // positive view verified to raise consistency
  bool neg_ok = false;       // negative view verified to lower it; else drop
  int pos_retries = 0;
  int neg_retries = 0;
};

/// Bundles feature and structural counterfactuals for both polarities. Each
/// polarity tries the combined view first, then feature-only, then
/// edits-only, accepting the first that strictly moves the consistency score
/// the right way; the positive degrades to the original row (pos_ok false)
/// and the negative to discarded (neg_ok false).
CounterfactualPair generate_pair(const AttributedGraph& g, NodeId i,
                                 const CfConfig& cfg,
                                 const ConsistencyConfig& ccfg,
                                 double feature_std_hint = -1.0);

/// generate_pair with one family of edits switched off (ablations).
CounterfactualPair generate_pair_filtered(const AttributedGraph& g, NodeId i,
                                          const CfConfig& cfg,
                                          const ConsistencyConfig& ccfg,
                                          bool use_feature_cf,
                                          bool use_struct_cf,
                                          double feature_std_hint = -1.0);

struct OracleFeatureCf {
  std::vector<double> features;
  bool found = false;
  double norm = 0.0;  // perturbation norm of the returned candidate
};

/// Reference search for the minimal-norm feature perturbation satisfying the
/// mode's constraint: a step grid along both signs of the centroid axis plus
/// seeded random unit directions, together with the adaptive-step candidates
/// the gradient method itself would try (so a gradient success is always in
/// the search space and the oracle's norm is ≤ the gradient method's).
OracleFeatureCf oracle_feature_cf(const AttributedGraph& g, NodeId i,
                                  CfMode mode, const CfConfig& cfg,
                                  const ConsistencyConfig& ccfg, int grid = 30,
                                  int directions = 32, std::uint64_t seed = 0,
                                  double feature_std_hint = -1.0);

struct OracleStructCf {
  EdgeEditSet edits;
  bool found = false;
};

/// Brute-force enumeration over all edit sets within the mode's budgets
/// (positive: ≤2 removals, ≤1 addition from the 2-hop set; negative
/// mirrored). Returns the feasible set with minimal cost, ties broken by
/// lexicographic (removes, adds). Intended for small graphs.
OracleStructCf oracle_struct_cf(const AttributedGraph& g, NodeId i, CfMode mode,
                                const CfConfig& cfg,
                                const ConsistencyConfig& ccfg);

}  // namespace acgad
