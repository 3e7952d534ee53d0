#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "acgad/inject.hpp"
#include "acgad/rng.hpp"
#include "acgad/synthetic.hpp"
#include "acgad/train.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acgad;

namespace {

AttributedGraph small_bench(std::uint64_t seed, NodeId n = 80) {
  SyntheticConfig sc;
  sc.n = n;
  sc.d = 8;
  sc.communities = 4;
  sc.p_in = 0.2;
  sc.p_out = 0.01;
  sc.seed = seed;
  return synthetic_graph(sc);
}

SelectedSubset pick(const AttributedGraph& g, std::int64_t k) {
  SelectionConfig sc;
  sc.k = k;
  return select_subset(g, sc);
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  return a.W0 == b.W0 && a.W1 == b.W1 && a.Wp1 == b.Wp1 && a.Wp2 == b.Wp2 &&
         a.adam_steps == b.adam_steps;
}

}  // namespace

TEST_CASE("resolve_lambda_u follows edge density") {
  auto dense = test::random_graph(20, 3, 0.5, 1);  // ~95 edges on 20 nodes
  CHECK(resolve_lambda_u(dense, -1.0) == 0.05);
  auto sparse = build_graph(10, 2, {{0, 1}, {2, 3}},
                            std::vector<double>(20, 0.0));
  CHECK(resolve_lambda_u(sparse, -1.0) == 0.1);
  CHECK(resolve_lambda_u(dense, 0.25) == 0.25);
  CHECK(resolve_lambda_u(dense, 0.0) == 0.0);
}

TEST_CASE("batch loss gradients match finite differences end to end") {
  auto g = small_bench(5, 40);
  auto ctx = make_encoder_context(g);
  auto params = ModelParams::init(g.d, 3);

  // A batch mixing every view flavor: identity positive, feature-override
  // positive, edits-only positive, and negatives with and without edits.
  // Nodes are picked so each has a neighbor and a 2-hop candidate.
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < g.n && nodes.size() < 4; ++v)
    if (g.degree(v) >= 1 && !two_hop_neighbors(g, v).empty())
      nodes.push_back(v);
  REQUIRE(nodes.size() == 4);
  std::vector<NodeView> pos(4), neg(4);
  std::vector<char> has_neg{1, 1, 0, 1};
  pos[0].identity = true;
  pos[1].identity = false;
  pos[1].features.assign(g.feature_row(nodes[1]).begin(),
                         g.feature_row(nodes[1]).end());
  pos[1].features[2] += 0.8;
  pos[2].identity = false;
  pos[2].edits.removes = {g.neighbors(nodes[2])[0]};
  pos[3].identity = false;
  pos[3].features.assign(g.feature_row(nodes[3]).begin(),
                         g.feature_row(nodes[3]).end());
  pos[3].features[0] -= 0.4;
  pos[3].edits.adds = {two_hop_neighbors(g, nodes[3])[0]};

  neg[0].features.assign(g.feature_row(nodes[0]).begin(),
                         g.feature_row(nodes[0]).end());
  neg[0].features[4] += 1.2;
  neg[1].edits.adds = {two_hop_neighbors(g, nodes[1])[0]};
  neg[3].features.assign(g.feature_row(nodes[3]).begin(),
                         g.feature_row(nodes[3]).end());
  neg[3].features[1] += 0.6;
  neg[3].edits.removes = {g.neighbors(nodes[3])[0]};

  const double tau = 0.2, lu = 0.1;
  ParamGrads grads;
  grads.zero(params);
  auto terms = batch_loss_and_grads(ctx, params, nodes, pos, neg, has_neg, tau,
                                    lu, &grads);
  CHECK(terms.total ==
        doctest::Approx(terms.contrastive + lu * terms.uniform).epsilon(1e-12));

  const double h = 1e-5;
  auto loss_at = [&](const ModelParams& p) {
    return batch_loss_and_grads(ctx, p, nodes, pos, neg, has_neg, tau, lu,
                                nullptr)
        .total;
  };
  auto fd_tensor = [&](Eigen::MatrixXd ModelParams::*w,
                       const Eigen::MatrixXd& analytic) {
    Rng pickr(19);
    for (int probe = 0; probe < 20; ++probe) {
      auto r = static_cast<Eigen::Index>(pickr.next_below((params.*w).rows()));
      auto c = static_cast<Eigen::Index>(pickr.next_below((params.*w).cols()));
      ModelParams pp = params;
      (pp.*w)(r, c) += h;
      const double up = loss_at(pp);
      (pp.*w)(r, c) -= 2 * h;
      const double dn = loss_at(pp);
      const double fd = (up - dn) / (2 * h);
      const double ana = analytic(r, c);
      const double rel =
          std::abs(fd - ana) / std::max({std::abs(fd), std::abs(ana), 1e-6});
      CHECK(rel <= 1e-4);
    }
  };
  fd_tensor(&ModelParams::W0, grads.W0);
  fd_tensor(&ModelParams::W1, grads.W1);
  fd_tensor(&ModelParams::Wp1, grads.Wp1);
  fd_tensor(&ModelParams::Wp2, grads.Wp2);
}

TEST_CASE("one epoch produces one log row and config errors throw") {
  auto g = small_bench(11);
  auto subset = pick(g, 16);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.patience = 1;
  cfg.seed = 4;
  auto res = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  CHECK(res.log.epochs.size() == 1);
  CHECK(res.log.best_epoch == 0);
  CHECK(res.params.adam_steps >= 1);
  CHECK(std::isfinite(res.log.epochs[0].train_loss));
  CHECK(std::isfinite(res.log.epochs[0].val_loss));
  CHECK(res.log.epochs[0].seconds >= 0.0);
  CHECK(res.log.epochs[0].cf_pos_ok >= 0);

  TrainConfig bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(train(g, subset, bad, CfConfig{}, ConsistencyConfig{}),
                  std::invalid_argument);
  bad = cfg;
  bad.patience = 5;
  bad.max_epochs = 3;
  CHECK_THROWS_AS(train(g, subset, bad, CfConfig{}, ConsistencyConfig{}),
                  std::invalid_argument);
  bad = cfg;
  bad.val_fraction = 0.5;
  CHECK_THROWS_AS(train(g, subset, bad, CfConfig{}, ConsistencyConfig{}),
                  std::invalid_argument);
  SelectedSubset empty;
  CHECK_THROWS_AS(train(g, empty, cfg, CfConfig{}, ConsistencyConfig{}),
                  std::invalid_argument);
}

TEST_CASE("training is deterministic and thread-count independent") {
  auto g = small_bench(21);
  auto subset = pick(g, 14);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 4;
  cfg.seed = 9;
  cfg.threads = 1;
  auto a = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  auto b = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  CHECK(params_equal(a.params, b.params));
  REQUIRE(a.log.epochs.size() == b.log.epochs.size());
  for (std::size_t e = 0; e < a.log.epochs.size(); ++e) {
    CHECK(a.log.epochs[e].train_loss == b.log.epochs[e].train_loss);
    CHECK(a.log.epochs[e].val_loss == b.log.epochs[e].val_loss);
  }

  cfg.threads = 4;
  auto c = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  CHECK(params_equal(a.params, c.params));
  for (std::size_t e = 0; e < a.log.epochs.size(); ++e)
    CHECK(a.log.epochs[e].train_loss == c.log.epochs[e].train_loss);

  cfg.threads = 1;
  cfg.seed = 10;
  auto d = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  CHECK(!params_equal(a.params, d.params));
}

TEST_CASE("returned params are exactly the best-validation epoch's") {
  auto g = small_bench(31);
  auto subset = pick(g, 14);
  TrainConfig cfg;
  cfg.max_epochs = 8;
  cfg.patience = 8;
  cfg.seed = 5;
  cfg.threads = 2;
  auto full = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  const int best = full.log.best_epoch;
  REQUIRE(best >= 0);
  // best_epoch is the argmin of the validation curve (first attainment).
  double best_val = full.log.epochs[static_cast<std::size_t>(best)].val_loss;
  for (std::size_t e = 0; e < full.log.epochs.size(); ++e) {
    if (static_cast<int>(e) < best)
      CHECK(full.log.epochs[e].val_loss > best_val);
    else
      CHECK(full.log.epochs[e].val_loss >= best_val);
  }
  // A rerun truncated at best+1 epochs ends on that same minimum, so its
  // returned params must be bit-identical to the full run's.
  TrainConfig trunc = cfg;
  trunc.max_epochs = best + 1;
  trunc.patience = best + 1;
  auto cut = train(g, subset, trunc, CfConfig{}, ConsistencyConfig{});
  CHECK(cut.log.best_epoch == best);
  CHECK(params_equal(full.params, cut.params));
}

TEST_CASE("early stopping halts after patience epochs without improvement") {
  auto g = small_bench(41);
  auto subset = pick(g, 12);
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 3;
  cfg.seed = 2;
  auto res = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  const auto ran = static_cast<int>(res.log.epochs.size());
  if (ran < cfg.max_epochs)
    CHECK(ran == res.log.best_epoch + cfg.patience + 1);
  CHECK(res.log.best_epoch <= ran - 1);
}

TEST_CASE("ablation switches change the run but stay finite") {
  auto g = small_bench(51);
  auto subset = pick(g, 12);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  cfg.seed = 7;

  PairOptions full;
  auto base = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{}, full);

  PairOptions no_neg;
  no_neg.cf_negative = false;
  auto nn = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{}, no_neg);
  CHECK(!params_equal(base.params, nn.params));

  PairOptions no_pos;
  no_pos.cf_positive = false;
  auto np = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{}, no_pos);
  CHECK(std::isfinite(np.log.epochs[0].train_loss));

  PairOptions rand_aug;
  rand_aug.source = PairSource::Baseline;
  auto ra = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{}, rand_aug);
  CHECK(std::isfinite(ra.log.epochs[0].train_loss));
  CHECK(ra.log.epochs[0].cf_pos_ok == static_cast<int>(subset.members.size()));
  auto ra2 = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{}, rand_aug);
  CHECK(params_equal(ra.params, ra2.params));
}

TEST_CASE("tiny selections still train, with the holdout clamped") {
  auto g = small_bench(61, 40);
  SelectionConfig sc;
  sc.k = 1;
  auto subset = select_subset(g, sc);
  REQUIRE(subset.members.size() >= 1);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  cfg.seed = 3;
  auto res = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
  CHECK(res.log.epochs.size() == 2);
  if (subset.members.size() == 1)
    CHECK(res.log.epochs[0].val_loss == res.log.epochs[0].train_loss);
}

TEST_CASE("training loss decreases on the injected synthetic benchmark") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticConfig sc;
    sc.seed = seed;
    auto clean = synthetic_graph(sc);
    InjectionConfig ic;
    ic.ratio = 0.05;
    ic.seed = seed;
    auto injected = inject_anomalies(clean, ic);
    auto g = zscore_features(injected.graph);
    auto subset = pick(g, 50);
    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    cfg.seed = seed;
    auto res = train(g, subset, cfg, CfConfig{}, ConsistencyConfig{});
    REQUIRE(res.log.epochs.size() == 10);
    if (res.log.epochs[9].train_loss < res.log.epochs[0].train_loss)
      ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("train log csv round trip") {
  TrainLog log;
  log.epochs.push_back({1.5, 1.25, 1.0, -2.0, 10, 8, 0.25});
  log.epochs.push_back({1.0, 0.75, 0.5, -3.0, 10, 9, 0.5});
  log.best_epoch = 1;
  auto path =
      (std::filesystem::temp_directory_path() / "acgad_train_log.csv").string();
  write_train_log_csv(log, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "epoch,train_loss,val_loss,contrastive,uniformity,cf_pos_ok,cf_neg_ok,"
        "seconds");
  std::getline(in, line);
  CHECK(line.rfind("0,1.5,1.25,1,-2,10,8,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("1,1,0.75,0.5,-3,10,9,", 0) == 0);
  std::remove(path.c_str());
}
