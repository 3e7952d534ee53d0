#include "acgad/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "acgad/loss.hpp"
#include "acgad/rng.hpp"

namespace acgad {

double resolve_lambda_u(const AttributedGraph& g, double requested) {
  if (requested >= 0.0) return requested;
  const double density = g.n > 0 ? static_cast<double>(g.undirected_edge_count()) /
                                       static_cast<double>(g.n)
                                 : 0.0;
  return density >= 3.0 ? 0.05 : 0.1;
}

void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  if (threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  threads = static_cast<int>(
      std::min<std::int64_t>(threads, count));
  if (threads <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

BatchTerms batch_loss_and_grads(const EncoderContext& ctx,
                                const ModelParams& params,
                                const std::vector<NodeId>& nodes,
                                const std::vector<NodeView>& pos,
                                const std::vector<NodeView>& neg,
                                const std::vector<char>& has_neg, double tau,
                                double lambda_u, ParamGrads* grads) {
  const std::size_t b = nodes.size();
  if (pos.size() != b || neg.size() != b || has_neg.size() != b)
    throw std::invalid_argument("batch_loss_and_grads: size mismatch");

  const auto f = full_forward(ctx, params);
  const Eigen::Index bi = static_cast<Eigen::Index>(b);
  Eigen::MatrixXd a(bi, kEmbedDim), p(bi, kEmbedDim), n(bi, kEmbedDim);
  n.setZero();
  std::vector<LocalView> pos_views(b), neg_views(b);
  std::vector<char> pos_is_view(b, 0);
  for (std::size_t r = 0; r < b; ++r) {
    const NodeId v = nodes[r];
    a.row(static_cast<Eigen::Index>(r)) = f.Z.row(v);
    if (pos[r].identity) {
      p.row(static_cast<Eigen::Index>(r)) = f.Z.row(v);
    } else {
      pos_views[r] = local_view_forward(ctx, params, v,
                                        pos[r].features.empty()
                                            ? nullptr
                                            : pos[r].features.data(),
                                        &pos[r].edits);
      p.row(static_cast<Eigen::Index>(r)) = pos_views[r].z;
      pos_is_view[r] = 1;
    }
    if (has_neg[r]) {
      neg_views[r] = local_view_forward(ctx, params, v,
                                        neg[r].features.empty()
                                            ? nullptr
                                            : neg[r].features.data(),
                                        &neg[r].edits);
      n.row(static_cast<Eigen::Index>(r)) = neg_views[r].z;
    }
  }

  const auto nce = info_nce(a, p, n, has_neg, tau);
  const auto unif = uniformity(a);
  BatchTerms terms;
  terms.contrastive = nce.loss;
  terms.uniform = unif.loss;
  terms.total = nce.loss + lambda_u * unif.loss;

  if (grads != nullptr) {
    Eigen::MatrixXd dz_full = Eigen::MatrixXd::Zero(ctx.adj.n, kEmbedDim);
    for (std::size_t r = 0; r < b; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const NodeId v = nodes[r];
      dz_full.row(v) += nce.d_anchor.row(ri) + lambda_u * unif.d_z.row(ri);
      if (pos_is_view[r])
        view_backward(pos_views[r], params, nce.d_pos.row(ri), *grads);
      else
        dz_full.row(v) += nce.d_pos.row(ri);
      if (has_neg[r])
        view_backward(neg_views[r], params, nce.d_neg.row(ri), *grads);
    }
    full_backward(ctx, params, f, dz_full, *grads);
  }
  return terms;
}

namespace {

struct EpochViews {
  std::vector<NodeView> pos, neg;  // indexed like subset.members
  std::vector<char> has_neg;
  int pos_ok = 0;
  int neg_ok = 0;
};

EpochViews make_epoch_views(const AttributedGraph& g,
                            const std::vector<NodeId>& members, int epoch,
                            const TrainConfig& cfg, const CfConfig& cf_cfg,
                            const ConsistencyConfig& ccfg,
                            const PairOptions& opts, double std_hint) {
  const std::size_t m = members.size();
  EpochViews out;
  out.pos.resize(m);
  out.neg.resize(m);
  out.has_neg.assign(m, 0);

  if (opts.source == PairSource::Baseline) {
    const std::uint64_t aug_seed =
        derive_seed(cfg.seed, "train.aug", static_cast<std::uint64_t>(epoch));
    auto v1 = baseline_augment(g, opts.baseline, aug_seed, 0);
    auto v2 = baseline_augment(g, opts.baseline, aug_seed, 1);
    for (std::size_t r = 0; r < m; ++r) {
      const auto v = static_cast<std::size_t>(members[r]);
      out.pos[r] = {false, std::move(v1[v].features), std::move(v1[v].edits)};
      out.neg[r] = {false, std::move(v2[v].features), std::move(v2[v].edits)};
      out.has_neg[r] = 1;
    }
    out.pos_ok = static_cast<int>(m);
    out.neg_ok = static_cast<int>(m);
    return out;
  }

  std::vector<CounterfactualPair> pairs(m);
  parallel_for(static_cast<std::int64_t>(m), cfg.threads, [&](std::int64_t r) {
    pairs[static_cast<std::size_t>(r)] = generate_pair_filtered(
        g, members[static_cast<std::size_t>(r)], cf_cfg, ccfg,
        opts.feature_cf, opts.struct_cf, std_hint);
  });
  for (std::size_t r = 0; r < m; ++r) {
    auto& pr = pairs[r];
    out.pos_ok += pr.pos_ok ? 1 : 0;
    out.neg_ok += pr.neg_ok ? 1 : 0;
    if (opts.cf_positive && !(pr.pos_identity && pr.pos_edits.empty())) {
      out.pos[r] = {false, std::move(pr.pos_features), std::move(pr.pos_edits)};
    }
    if (opts.cf_negative && pr.neg_ok) {
      out.neg[r] = {false, std::move(pr.neg_features), std::move(pr.neg_edits)};
      out.has_neg[r] = 1;
    }
  }
  return out;
}

// Gathers the rows of an epoch's views for one batch / the holdout.
void gather(const EpochViews& views, const std::vector<std::size_t>& idx,
            std::vector<NodeView>& pos, std::vector<NodeView>& neg,
            std::vector<char>& has_neg) {
  pos.clear();
  neg.clear();
  has_neg.clear();
  for (std::size_t k : idx) {
    pos.push_back(views.pos[k]);
    neg.push_back(views.neg[k]);
    has_neg.push_back(views.has_neg[k]);
  }
}

}  // namespace

TrainResult train(const AttributedGraph& g, const SelectedSubset& subset,
                  const TrainConfig& cfg, const CfConfig& cf_cfg,
                  const ConsistencyConfig& ccfg, const PairOptions& opts) {
  if (subset.members.empty())
    throw std::invalid_argument("train: empty selection");
  if (cfg.tau <= 0.0) throw std::invalid_argument("train: tau must be positive");
  if (cfg.patience > cfg.max_epochs)
    throw std::invalid_argument("train: patience exceeds max_epochs");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 0.5))
    throw std::invalid_argument("train: val_fraction outside (0, 0.5)");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("train: batch_size must be positive");

  const double lambda_u = resolve_lambda_u(g, cfg.lambda_u);
  const double std_hint = feature_std(g);
  const auto ctx = make_encoder_context(g);

  TrainResult result;
  result.params = ModelParams::init(g.d, derive_seed(cfg.seed, "train.init"));

  const std::vector<NodeId>& members = subset.members;
  const std::size_t s = members.size();

  // Seeded holdout: indices into `members`, at least one node kept training.
  std::vector<std::size_t> order(s);
  for (std::size_t i = 0; i < s; ++i) order[i] = i;
  {
    Rng hr(derive_seed(cfg.seed, "train.holdout"));
    hr.shuffle(order);
  }
  const auto want = static_cast<std::size_t>(
      std::ceil(cfg.val_fraction * static_cast<double>(s)));
  const std::size_t n_hold = std::min(want, s - 1);
  std::vector<std::size_t> hold_idx(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_hold),
                                     order.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<NodeId> hold_nodes;
  for (std::size_t k : hold_idx) hold_nodes.push_back(members[k]);

  double best_val = std::numeric_limits<double>::infinity();
  ModelParams best_params = result.params;
  int since_best = 0;

  std::vector<NodeId> batch_nodes;
  std::vector<NodeView> batch_pos, batch_neg;
  std::vector<char> batch_has_neg;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto views =
        make_epoch_views(g, members, epoch, cfg, cf_cfg, ccfg, opts, std_hint);

    auto epoch_order = train_idx;
    {
      Rng sr(derive_seed(cfg.seed, "train.shuffle",
                         static_cast<std::uint64_t>(epoch)));
      sr.shuffle(epoch_order);
    }

    EpochStats stats;
    stats.cf_pos_ok = views.pos_ok;
    stats.cf_neg_ok = views.neg_ok;

    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < epoch_order.size(); start += bs) {
      const std::size_t stop = std::min(start + bs, epoch_order.size());
      std::vector<std::size_t> idx(epoch_order.begin() + static_cast<std::ptrdiff_t>(start),
                                   epoch_order.begin() + static_cast<std::ptrdiff_t>(stop));
      batch_nodes.clear();
      for (std::size_t k : idx) batch_nodes.push_back(members[k]);
      gather(views, idx, batch_pos, batch_neg, batch_has_neg);

      ParamGrads grads;
      grads.zero(result.params);
      const auto terms =
          batch_loss_and_grads(ctx, result.params, batch_nodes, batch_pos,
                               batch_neg, batch_has_neg, cfg.tau, lambda_u,
                               &grads);
      if (!std::isfinite(terms.total))
        throw std::runtime_error("training diverged at epoch " +
                                 std::to_string(epoch));
      adam_step(result.params, grads, cfg.lr, cfg.weight_decay);
      stats.train_loss += terms.total;
      stats.contrastive += terms.contrastive;
      stats.uniform += terms.uniform;
    }

    if (!hold_nodes.empty()) {
      gather(views, hold_idx, batch_pos, batch_neg, batch_has_neg);
      const auto terms =
          batch_loss_and_grads(ctx, result.params, hold_nodes, batch_pos,
                               batch_neg, batch_has_neg, cfg.tau, lambda_u,
                               nullptr);
      stats.val_loss = terms.total;
    } else {
      stats.val_loss = stats.train_loss;
    }
    if (!std::isfinite(stats.val_loss))
      throw std::runtime_error("training diverged at epoch " +
                               std::to_string(epoch));

    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    result.log.epochs.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      result.log.best_epoch = epoch;
      best_params = result.params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  result.params = std::move(best_params);
  return result;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,train_loss,val_loss,contrastive,uniformity,cf_pos_ok,"
         "cf_neg_ok,seconds\n";
  char buf[128];
  for (std::size_t e = 0; e < log.epochs.size(); ++e) {
    const auto& s = log.epochs[e];
    out << e;
    for (double v : {s.train_loss, s.val_loss, s.contrastive, s.uniform}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%d,%d,%.6f\n", s.cf_pos_ok, s.cf_neg_ok,
                  s.seconds);
    out << buf;
  }
}

}  // namespace acgad
