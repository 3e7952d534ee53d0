#include <cmath>
#include <filesystem>
#include <fstream>

#include "acgad/encoder.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acgad;

namespace {

Eigen::MatrixXd dense_adj(const AttributedGraph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(g.n, g.n);
  for (NodeId i = 0; i < g.n; ++i)
    for (NodeId j : g.neighbors(i)) a(i, j) = 1.0;
  Eigen::VectorXd dinv(g.n);
  for (NodeId i = 0; i < g.n; ++i)
    dinv(i) = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
  return dinv.asDiagonal() * a * dinv.asDiagonal();
}

Eigen::MatrixXd dense_forward(const AttributedGraph& g, const ModelParams& p) {
  Eigen::MatrixXd x(g.n, g.d);
  for (NodeId i = 0; i < g.n; ++i)
    for (int c = 0; c < g.d; ++c)
      x(i, c) = g.features[static_cast<std::size_t>(i) * g.d + c];
  Eigen::MatrixXd a = dense_adj(g);
  Eigen::MatrixXd h1 = (a * x * p.W0).cwiseMax(0.0);
  Eigen::MatrixXd zenc = a * h1 * p.W1;
  Eigen::MatrixXd hout = (zenc * p.Wp1).cwiseMax(0.0) * p.Wp2;
  for (Eigen::Index r = 0; r < hout.rows(); ++r) {
    double n = hout.row(r).norm();
    if (n > 0.0) hout.row(r) /= n;
  }
  return hout;
}

}  // namespace

TEST_CASE("normalize_adjacency hand cases and properties") {
  auto single = build_graph(1, 1, {}, {0.0});
  auto a1 = normalize_adjacency(single);
  REQUIRE(a1.col.size() == 1);
  CHECK(a1.val[0] == doctest::Approx(1.0));

  auto pair = build_graph(2, 1, {{0, 1}}, {0, 0});
  auto a2 = normalize_adjacency(pair);
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd dense = adj_multiply(a2, x);
  CHECK(dense(0, 0) == doctest::Approx(0.5));
  CHECK(dense(0, 1) == doctest::Approx(0.5));
  CHECK(dense(1, 0) == doctest::Approx(0.5));
  CHECK(dense(1, 1) == doctest::Approx(0.5));

  auto g = test::random_graph(30, 2, 0.15, 3);
  auto a = normalize_adjacency(g);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.n, g.n);
  Eigen::MatrixXd ad = adj_multiply(a, eye);
  CHECK((ad - ad.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  for (NodeId i = 0; i < g.n; ++i) CHECK(ad.row(i).sum() > 0.0);
  for (std::size_t k = 0; k < a.val.size(); ++k) {
    CHECK(a.val[k] > 0.0);
    CHECK(a.val[k] <= 1.0 + 1e-12);
  }
  // Columns within each row are sorted and include the self-loop.
  for (NodeId i = 0; i < g.n; ++i) {
    bool has_self = false;
    for (auto k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (k > a.row_ptr[i]) CHECK(a.col[k] > a.col[k - 1]);
      if (a.col[k] == i) has_self = true;
    }
    CHECK(has_self);
  }
}

TEST_CASE("full_forward matches the dense reference") {
  auto g = test::random_graph(25, 6, 0.2, 11);
  auto params = ModelParams::init(g.d, 5);
  auto ctx = make_encoder_context(g);
  auto f = full_forward(ctx, params);
  auto ref = dense_forward(g, params);
  CHECK((f.Z - ref).cwiseAbs().maxCoeff() < 1e-10);
  for (NodeId i = 0; i < g.n; ++i) {
    if (f.degenerate[i]) continue;
    CHECK(f.Z.row(i).norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("zero weights produce flagged degenerate embeddings") {
  auto g = test::random_graph(10, 3, 0.3, 7);
  auto params = ModelParams::init(g.d, 1);
  params.W0.setZero();
  params.W1.setZero();
  params.Wp1.setZero();
  params.Wp2.setZero();
  auto ctx = make_encoder_context(g);
  auto f = full_forward(ctx, params);
  for (NodeId i = 0; i < g.n; ++i) {
    CHECK(f.degenerate[i] == 1);
    CHECK(f.Z.row(i).norm() == 0.0);
  }
  auto view = local_view_forward(ctx, params, 0, nullptr, nullptr);
  CHECK(view.degenerate);
  CHECK(view.z.norm() == 0.0);
}

TEST_CASE("local view without overrides equals the global forward") {
  auto g = test::random_graph(30, 5, 0.15, 13);
  auto params = ModelParams::init(g.d, 3);
  auto ctx = make_encoder_context(g);
  auto f = full_forward(ctx, params);
  for (NodeId i = 0; i < g.n; ++i) {
    auto view = local_view_forward(ctx, params, i, nullptr, nullptr);
    CHECK((view.z - f.Z.row(i)).cwiseAbs().maxCoeff() < 1e-10);
  }
  // A no-op override is also identical.
  std::vector<double> same(g.feature_row(4).begin(), g.feature_row(4).end());
  EdgeEditSet none;
  auto view = local_view_forward(ctx, params, 4, same.data(), &none);
  CHECK((view.z - f.Z.row(4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("local view with overrides equals a rebuilt graph") {
  auto g = test::random_graph(28, 4, 0.18, 17);
  auto params = ModelParams::init(g.d, 9);
  auto ctx = make_encoder_context(g);
  int exercised = 0;
  for (NodeId i = 0; i < g.n; ++i) {
    auto nb = g.neighbors(i);
    if (nb.size() < 2) continue;
    auto hops = two_hop_neighbors(g, i);
    EdgeEditSet edits;
    edits.removes = {nb[1]};
    if (!hops.empty()) edits.adds = {hops[0]};
    std::vector<double> fx(g.feature_row(i).begin(), g.feature_row(i).end());
    fx[0] -= 2.0;
    fx[2] += 0.5;

    // Build the edited graph explicitly and run the full pass there.
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < g.n; ++u)
      for (NodeId v : g.neighbors(u))
        if (u < v) edges.emplace_back(u, v);
    std::erase_if(edges, [&](auto& e) {
      return (e.first == i && e.second == nb[1]) ||
             (e.second == i && e.first == nb[1]);
    });
    for (NodeId a : edits.adds) edges.emplace_back(std::min(i, a), std::max(i, a));
    auto feats = g.features;
    for (int c = 0; c < g.d; ++c)
      feats[static_cast<std::size_t>(i) * g.d + c] = fx[c];
    auto g2 = build_graph(g.n, g.d, edges, std::move(feats));
    auto ctx2 = make_encoder_context(g2);
    auto f2 = full_forward(ctx2, params);

    auto view = local_view_forward(ctx, params, i, fx.data(), &edits);
    CHECK((view.z - f2.Z.row(i)).cwiseAbs().maxCoeff() < 1e-10);
    ++exercised;
  }
  CHECK(exercised > 15);
}

TEST_CASE("analytic gradients match finite differences on a probe loss") {
  auto g = test::random_graph(12, 4, 0.25, 23);
  auto ctx = make_encoder_context(g);
  Rng probe_rng(99);
  // Probe: a fixed linear functional of three plain embeddings and one
  // override view, exercising every backward path.
  std::vector<NodeId> plain{0, 3, 7};
  NodeId vnode = 5;
  EdgeEditSet edits;
  {
    auto nb = g.neighbors(vnode);
    REQUIRE(!nb.empty());
    edits.removes = {nb[0]};
    auto hops = two_hop_neighbors(g, vnode);
    if (!hops.empty()) edits.adds = {hops[0]};
  }
  std::vector<double> fx(g.feature_row(vnode).begin(),
                         g.feature_row(vnode).end());
  fx[1] += 1.0;
  Eigen::MatrixXd c(4, kEmbedDim);
  for (Eigen::Index r = 0; r < c.rows(); ++r)
    for (Eigen::Index k = 0; k < c.cols(); ++k) c(r, k) = probe_rng.normal();

  auto loss = [&](const ModelParams& p) {
    auto f = full_forward(ctx, p);
    double l = 0.0;
    for (std::size_t r = 0; r < plain.size(); ++r)
      l += c.row(static_cast<Eigen::Index>(r)).dot(f.Z.row(plain[r]));
    auto view = local_view_forward(ctx, p, vnode, fx.data(), &edits);
    l += c.row(3).dot(view.z);
    return l;
  };

  auto params = ModelParams::init(g.d, 31);
  ParamGrads grads;
  grads.zero(params);
  {
    auto f = full_forward(ctx, params);
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(g.n, kEmbedDim);
    for (std::size_t r = 0; r < plain.size(); ++r)
      dz.row(plain[r]) += c.row(static_cast<Eigen::Index>(r));
    full_backward(ctx, params, f, dz, grads);
    auto view = local_view_forward(ctx, params, vnode, fx.data(), &edits);
    view_backward(view, params, c.row(3), grads);
  }

  const double h = 1e-4;
  auto check_tensor = [&](Eigen::MatrixXd ModelParams::*w,
                          const Eigen::MatrixXd& analytic) {
    Rng pick(7);
    for (int probe = 0; probe < 25; ++probe) {
      auto r = static_cast<Eigen::Index>(pick.next_below((params.*w).rows()));
      auto cc = static_cast<Eigen::Index>(pick.next_below((params.*w).cols()));
      ModelParams pp = params;
      (pp.*w)(r, cc) += h;
      double up = loss(pp);
      (pp.*w)(r, cc) -= 2 * h;
      double dn = loss(pp);
      double fd = (up - dn) / (2 * h);
      double ana = analytic(r, cc);
      double rel = std::abs(fd - ana) / std::max({std::abs(fd), std::abs(ana), 1e-6});
      CHECK(rel <= 1e-4);
    }
  };
  check_tensor(&ModelParams::W0, grads.W0);
  check_tensor(&ModelParams::W1, grads.W1);
  check_tensor(&ModelParams::Wp1, grads.Wp1);
  check_tensor(&ModelParams::Wp2, grads.Wp2);

  // Zero upstream gradient gives zero parameter gradients.
  ParamGrads zg;
  zg.zero(params);
  auto f = full_forward(ctx, params);
  full_backward(ctx, params, f, Eigen::MatrixXd::Zero(g.n, kEmbedDim), zg);
  CHECK(zg.W0.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zg.Wp2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam_step hand values and divergence guard") {
  ModelParams p;
  p.W0 = Eigen::MatrixXd::Zero(1, 1);
  p.W1 = Eigen::MatrixXd::Zero(1, 1);
  p.Wp1 = Eigen::MatrixXd::Zero(1, 1);
  p.Wp2 = Eigen::MatrixXd::Zero(1, 1);
  p.a0 = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
  p.a1 = p.a0;
  p.ap1 = p.a0;
  p.ap2 = p.a0;
  ParamGrads g;
  g.W0 = Eigen::MatrixXd::Constant(1, 1, 1.0);  // g=1, w=0
  g.W1 = Eigen::MatrixXd::Zero(1, 1);           // g=0, w=0
  g.Wp1 = Eigen::MatrixXd::Zero(1, 1);          // g=0, w=1 (decay-driven)
  g.Wp2 = Eigen::MatrixXd::Zero(1, 1);
  p.Wp1(0, 0) = 1.0;
  adam_step(p, g, 0.001, 5e-4);
  CHECK(p.W0(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(p.W1(0, 0) == 0.0);
  CHECK(p.Wp1(0, 0) == doctest::Approx(1.0 - 0.001).epsilon(1e-4));
  CHECK(p.Wp1(0, 0) < 1.0);
  CHECK(p.adam_steps == 1);

  g.W0(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(p, g, 0.001, 5e-4), "diverged",
                       std::runtime_error);
}

TEST_CASE("checkpoint round trip is exact") {
  auto params = ModelParams::init(6, 42);
  // Touch the Adam state so it is non-trivial.
  ParamGrads g;
  g.zero(params);
  g.W0.setConstant(0.25);
  g.W1.setConstant(-0.5);
  g.Wp1.setConstant(0.125);
  g.Wp2.setConstant(1.0);
  adam_step(params, g, 0.001, 5e-4);
  adam_step(params, g, 0.001, 5e-4);

  auto path =
      (std::filesystem::temp_directory_path() / "acgad_ckpt_test.txt").string();
  save_checkpoint(params, path);
  auto back = load_checkpoint(path);
  CHECK(back.adam_steps == params.adam_steps);
  CHECK(back.W0 == params.W0);
  CHECK(back.W1 == params.W1);
  CHECK(back.Wp1 == params.Wp1);
  CHECK(back.Wp2 == params.Wp2);
  CHECK(back.a0.m == params.a0.m);
  CHECK(back.a0.v == params.a0.v);
  CHECK(back.ap2.v == params.ap2.v);

  std::ofstream bad(path);
  bad << "not a checkpoint\n";
  bad.close();
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
}

TEST_CASE("forward_nodes matches the whole-graph pass") {
  auto g = test::random_graph(20, 3, 0.2, 29);
  auto params = ModelParams::init(g.d, 8);
  auto ctx = make_encoder_context(g);
  auto f = full_forward(ctx, params);
  std::vector<NodeId> nodes{1, 4, 9, 15};
  auto set = forward_nodes(ctx, params, nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    CHECK((set.z.row(static_cast<Eigen::Index>(k)) - f.Z.row(nodes[k]))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  // Same-seed init is identical.
  auto p2 = ModelParams::init(g.d, 8);
  CHECK(p2.W0 == params.W0);
  CHECK(p2.Wp2 == params.Wp2);
}
