#include "acgad/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "acgad/rng.hpp"

namespace acgad {

NormalizedAdjacency normalize_adjacency(const AttributedGraph& g) {
  NormalizedAdjacency a;
  a.n = g.n;
  a.inv_sqrt.resize(g.n);
  for (NodeId i = 0; i < g.n; ++i)
    a.inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
  a.row_ptr.assign(static_cast<std::size_t>(g.n) + 1, 0);
  for (NodeId i = 0; i < g.n; ++i)
    a.row_ptr[static_cast<std::size_t>(i) + 1] =
        a.row_ptr[i] + g.degree(i) + 1;  // +1 for the self-loop
  a.col.resize(a.row_ptr[g.n]);
  a.val.resize(a.row_ptr[g.n]);
  for (NodeId i = 0; i < g.n; ++i) {
    auto cursor = a.row_ptr[i];
    bool self_written = false;
    for (NodeId j : g.neighbors(i)) {
      if (!self_written && j > i) {  // keep columns sorted with i inserted
        a.col[cursor] = i;
        a.val[cursor] = a.inv_sqrt[i] * a.inv_sqrt[i];
        ++cursor;
        self_written = true;
      }
      a.col[cursor] = j;
      a.val[cursor] = a.inv_sqrt[i] * a.inv_sqrt[j];
      ++cursor;
    }
    if (!self_written) {
      a.col[cursor] = i;
      a.val[cursor] = a.inv_sqrt[i] * a.inv_sqrt[i];
      ++cursor;
    }
  }
  return a;
}

Eigen::MatrixXd adj_multiply(const NormalizedAdjacency& a,
                             const Eigen::MatrixXd& x) {
  if (x.rows() != a.n) throw std::invalid_argument("adjacency/matrix mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (NodeId i = 0; i < a.n; ++i)
    for (auto k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      out.row(i) += a.val[k] * x.row(a.col[k]);
  return out;
}

namespace {

Eigen::MatrixXd glorot(int rows, int cols, Rng& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      w(r, c) = (2.0 * rng.uniform01() - 1.0) * limit;
  return w;
}

AdamMoments zero_moments(const Eigen::MatrixXd& w) {
  return {Eigen::MatrixXd::Zero(w.rows(), w.cols()),
          Eigen::MatrixXd::Zero(w.rows(), w.cols())};
}

}  // namespace

ModelParams ModelParams::init(int d, std::uint64_t seed) {
  ModelParams p;
  {
    Rng r(derive_seed(seed, "init.W0"));
    p.W0 = glorot(d, kHiddenDim, r);
  }
  {
    Rng r(derive_seed(seed, "init.W1"));
    p.W1 = glorot(kHiddenDim, kEmbedDim, r);
  }
  {
    Rng r(derive_seed(seed, "init.Wp1"));
    p.Wp1 = glorot(kEmbedDim, kProjHiddenDim, r);
  }
  {
    Rng r(derive_seed(seed, "init.Wp2"));
    p.Wp2 = glorot(kProjHiddenDim, kEmbedDim, r);
  }
  p.a0 = zero_moments(p.W0);
  p.a1 = zero_moments(p.W1);
  p.ap1 = zero_moments(p.Wp1);
  p.ap2 = zero_moments(p.Wp2);
  return p;
}

void ParamGrads::zero(const ModelParams& p) {
  W0 = Eigen::MatrixXd::Zero(p.W0.rows(), p.W0.cols());
  W1 = Eigen::MatrixXd::Zero(p.W1.rows(), p.W1.cols());
  Wp1 = Eigen::MatrixXd::Zero(p.Wp1.rows(), p.Wp1.cols());
  Wp2 = Eigen::MatrixXd::Zero(p.Wp2.rows(), p.Wp2.cols());
}

bool ParamGrads::all_finite() const {
  return W0.allFinite() && W1.allFinite() && Wp1.allFinite() &&
         Wp2.allFinite();
}

EncoderContext make_encoder_context(const AttributedGraph& g) {
  EncoderContext ctx;
  ctx.g = &g;
  ctx.adj = normalize_adjacency(g);
  ctx.X.resize(g.n, g.d);
  for (NodeId i = 0; i < g.n; ++i)
    for (int c = 0; c < g.d; ++c)
      ctx.X(i, c) = g.features[static_cast<std::size_t>(i) * g.d + c];
  ctx.Q = adj_multiply(ctx.adj, ctx.X);
  return ctx;
}

FullForward full_forward(const EncoderContext& ctx, const ModelParams& p) {
  if (ctx.X.cols() != p.W0.rows())
    throw std::invalid_argument("feature dimension does not match W0");
  FullForward f;
  f.P = ctx.Q * p.W0;
  f.H1 = f.P.cwiseMax(0.0);
  f.M = adj_multiply(ctx.adj, f.H1);
  f.Zenc = f.M * p.W1;
  f.T1 = f.Zenc * p.Wp1;
  f.Hp = f.T1.cwiseMax(0.0);
  f.Hout = f.Hp * p.Wp2;
  auto n = f.Hout.rows();
  f.Z = Eigen::MatrixXd::Zero(n, f.Hout.cols());
  f.norms.resize(n);
  f.degenerate.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    double norm = f.Hout.row(r).norm();
    f.norms(r) = norm;
    if (norm == 0.0)
      f.degenerate[static_cast<std::size_t>(r)] = 1;
    else
      f.Z.row(r) = f.Hout.row(r) / norm;
  }
  return f;
}

namespace {

/// Effective degree of any node under edits incident to `center`.
std::int64_t effective_degree(const AttributedGraph& g, NodeId v, NodeId center,
                              const EdgeEditSet* edits) {
  std::int64_t deg = g.degree(v);
  if (!edits) return deg;
  if (v == center) return deg + edits->degree_delta();
  if (std::binary_search(edits->adds.begin(), edits->adds.end(), v)) ++deg;
  if (std::binary_search(edits->removes.begin(), edits->removes.end(), v)) --deg;
  return deg;
}

}  // namespace

LocalView local_view_forward(const EncoderContext& ctx, const ModelParams& p,
                             NodeId i, const double* features_override,
                             const EdgeEditSet* edits) {
  const AttributedGraph& g = *ctx.g;
  if (edits && edits->empty()) edits = nullptr;
  LocalView v;
  v.node = i;
  auto eff = effective_neighbors(g, i, edits);
  v.hop1.reserve(eff.size() + 1);
  {
    auto it = std::lower_bound(eff.begin(), eff.end(), i);
    v.hop1.assign(eff.begin(), it);
    v.hop1.push_back(i);
    v.hop1.insert(v.hop1.end(), it, eff.end());
  }
  const auto h = static_cast<Eigen::Index>(v.hop1.size());
  const int d = static_cast<int>(ctx.X.cols());

  auto inv_sqrt_eff = [&](NodeId u) {
    return 1.0 /
           std::sqrt(static_cast<double>(effective_degree(g, u, i, edits) + 1));
  };
  const double inv_i = inv_sqrt_eff(i);

  v.a_i.resize(h);
  v.q = Eigen::MatrixXd::Zero(h, d);
  for (Eigen::Index r = 0; r < h; ++r) {
    NodeId j = v.hop1[r];
    const double inv_j = inv_sqrt_eff(j);
    v.a_i(r) = inv_i * inv_j;
    // Aggregate x over the effective closed neighborhood of j. For j != i the
    // edits only matter via the edge (j, i) and the degree factors.
    auto add_term = [&](NodeId u) {
      double w = inv_j * inv_sqrt_eff(u);
      if (u == i && features_override) {
        for (int c = 0; c < d; ++c) v.q(r, c) += w * features_override[c];
      } else {
        v.q.row(r) += w * ctx.X.row(u);
      }
    };
    if (j == i) {
      add_term(i);
      for (NodeId u : eff) add_term(u);
    } else {
      add_term(j);
      bool has_i = false;
      for (NodeId u : g.neighbors(j)) {
        if (u == i) has_i = true;
        add_term(u);
      }
      // An added neighbor gains the edge to i that its stored list lacks.
      if (!has_i) add_term(i);
    }
  }

  v.p = v.q * p.W0;
  v.h1 = v.p.cwiseMax(0.0);
  v.m = v.a_i.transpose() * v.h1;
  v.zenc = v.m * p.W1;
  v.t1 = v.zenc * p.Wp1;
  v.hp = v.t1.cwiseMax(0.0);
  v.hout = v.hp * p.Wp2;
  v.norm = v.hout.norm();
  if (v.norm == 0.0) {
    v.degenerate = true;
    v.z = Eigen::RowVectorXd::Zero(v.hout.cols());
  } else {
    v.z = v.hout / v.norm;
  }
  return v;
}

namespace {

/// d(loss)/d(pre-normalization row) given d(loss)/d(normalized row).
Eigen::RowVectorXd norm_backward(const Eigen::RowVectorXd& dz,
                                 const Eigen::RowVectorXd& z, double norm) {
  if (norm == 0.0) return Eigen::RowVectorXd::Zero(dz.cols());
  return (dz - (dz.dot(z)) * z) / norm;
}

}  // namespace

void full_backward(const EncoderContext& ctx, const ModelParams& p,
                   const FullForward& f, const Eigen::MatrixXd& dz,
                   ParamGrads& out) {
  if (dz.rows() != f.Z.rows() || dz.cols() != f.Z.cols())
    throw std::invalid_argument("gradient shape does not match forward cache");
  const auto n = dz.rows();
  Eigen::MatrixXd dhout = Eigen::MatrixXd::Zero(n, dz.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    if (f.degenerate[static_cast<std::size_t>(r)]) continue;
    double dot = dz.row(r).dot(f.Z.row(r));
    dhout.row(r) = (dz.row(r) - dot * f.Z.row(r)) / f.norms(r);
  }
  out.Wp2 += f.Hp.transpose() * dhout;
  Eigen::MatrixXd dhp = dhout * p.Wp2.transpose();
  Eigen::MatrixXd dt1 =
      (f.T1.array() > 0.0).cast<double>().matrix().cwiseProduct(dhp);
  out.Wp1 += f.Zenc.transpose() * dt1;
  Eigen::MatrixXd dzenc = dt1 * p.Wp1.transpose();
  out.W1 += f.M.transpose() * dzenc;
  Eigen::MatrixXd dm = dzenc * p.W1.transpose();
  Eigen::MatrixXd dh1 = adj_multiply(ctx.adj, dm);  // Â is symmetric
  Eigen::MatrixXd dp =
      (f.P.array() > 0.0).cast<double>().matrix().cwiseProduct(dh1);
  out.W0 += ctx.Q.transpose() * dp;
}

void view_backward(const LocalView& v, const ModelParams& p,
                   const Eigen::RowVectorXd& dz, ParamGrads& out) {
  if (v.node < 0) throw std::invalid_argument("backward without forward cache");
  Eigen::RowVectorXd dhout = norm_backward(dz, v.z, v.norm);
  out.Wp2 += v.hp.transpose() * dhout;
  Eigen::RowVectorXd dhp = dhout * p.Wp2.transpose();
  Eigen::RowVectorXd dt1 =
      (v.t1.array() > 0.0).cast<double>().matrix().cwiseProduct(dhp);
  out.Wp1 += v.zenc.transpose() * dt1;
  Eigen::RowVectorXd dzenc = dt1 * p.Wp1.transpose();
  out.W1 += v.m.transpose() * dzenc;
  Eigen::RowVectorXd dm = dzenc * p.W1.transpose();
  for (Eigen::Index r = 0; r < v.a_i.size(); ++r) {
    Eigen::RowVectorXd dh1 = v.a_i(r) * dm;
    Eigen::RowVectorXd dp =
        (v.p.row(r).array() > 0.0).cast<double>().matrix().cwiseProduct(dh1);
    out.W0 += v.q.row(r).transpose() * dp;
  }
}

namespace {

void adam_update(Eigen::MatrixXd& w, AdamMoments& mom,
                 const Eigen::MatrixXd& grad, double lr, double wd,
                 std::int64_t t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Eigen::MatrixXd g = grad + wd * w;
  mom.m = b1 * mom.m + (1.0 - b1) * g;
  mom.v = b2 * mom.v + (1.0 - b2) * g.cwiseProduct(g);
  double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  Eigen::ArrayXXd mhat = mom.m.array() / c1;
  Eigen::ArrayXXd vhat = mom.v.array() / c2;
  w -= (lr * mhat / (vhat.sqrt() + eps)).matrix();
}

}  // namespace

void adam_step(ModelParams& p, const ParamGrads& g, double lr,
               double weight_decay) {
  if (!g.all_finite()) throw std::runtime_error("diverged");
  ++p.adam_steps;
  adam_update(p.W0, p.a0, g.W0, lr, weight_decay, p.adam_steps);
  adam_update(p.W1, p.a1, g.W1, lr, weight_decay, p.adam_steps);
  adam_update(p.Wp1, p.ap1, g.Wp1, lr, weight_decay, p.adam_steps);
  adam_update(p.Wp2, p.ap2, g.Wp2, lr, weight_decay, p.adam_steps);
  if (!p.W0.allFinite() || !p.W1.allFinite() || !p.Wp1.allFinite() ||
      !p.Wp2.allFinite())
    throw std::runtime_error("diverged");
}

EmbeddingSet forward_nodes(const EncoderContext& ctx, const ModelParams& p,
                           const std::vector<NodeId>& nodes,
                           const std::vector<ViewOverride>& overrides) {
  if (!overrides.empty() && overrides.size() != nodes.size())
    throw std::invalid_argument("override list does not match node list");
  EmbeddingSet set;
  set.nodes = nodes;
  set.z.resize(static_cast<Eigen::Index>(nodes.size()), kEmbedDim);
  set.degenerate.assign(nodes.size(), 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double* feat = overrides.empty() ? nullptr : overrides[k].features;
    const EdgeEditSet* edits = overrides.empty() ? nullptr : overrides[k].edits;
    auto view = local_view_forward(ctx, p, nodes[k], feat, edits);
    set.z.row(static_cast<Eigen::Index>(k)) = view.z;
    set.degenerate[k] = view.degenerate;
  }
  return set;
}

namespace {

constexpr const char* kCheckpointMagic = "acgad-checkpoint v1";

void write_matrix(std::ofstream& f, const char* name,
                  const Eigen::MatrixXd& m) {
  f << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      f << (c ? " " : "") << buf;
    }
    f << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::ifstream& f, const std::string& name) {
  std::string tag, got;
  Eigen::Index rows, cols;
  if (!(f >> tag >> got >> rows >> cols) || tag != "tensor" || got != name)
    throw std::runtime_error("checkpoint: expected tensor " + name);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(f >> m(r, c)))
        throw std::runtime_error("checkpoint: truncated tensor " + name);
  return m;
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f << kCheckpointMagic << "\n";
  f << "dims " << p.W0.rows() << " " << kHiddenDim << " " << kEmbedDim << "\n";
  f << "steps " << p.adam_steps << "\n";
  write_matrix(f, "W0", p.W0);
  write_matrix(f, "W1", p.W1);
  write_matrix(f, "Wp1", p.Wp1);
  write_matrix(f, "Wp2", p.Wp2);
  write_matrix(f, "W0.m", p.a0.m);
  write_matrix(f, "W0.v", p.a0.v);
  write_matrix(f, "W1.m", p.a1.m);
  write_matrix(f, "W1.v", p.a1.v);
  write_matrix(f, "Wp1.m", p.ap1.m);
  write_matrix(f, "Wp1.v", p.ap1.v);
  write_matrix(f, "Wp2.m", p.ap2.m);
  write_matrix(f, "Wp2.v", p.ap2.v);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kCheckpointMagic)
    throw std::runtime_error("checkpoint: unsupported version or bad magic");
  std::string tag;
  Eigen::Index d, hidden, embed;
  if (!(f >> tag >> d >> hidden >> embed) || tag != "dims" ||
      hidden != kHiddenDim || embed != kEmbedDim)
    throw std::runtime_error("checkpoint: bad dims header");
  ModelParams p;
  if (!(f >> tag >> p.adam_steps) || tag != "steps")
    throw std::runtime_error("checkpoint: bad steps header");
  p.W0 = read_matrix(f, "W0");
  p.W1 = read_matrix(f, "W1");
  p.Wp1 = read_matrix(f, "Wp1");
  p.Wp2 = read_matrix(f, "Wp2");
  p.a0.m = read_matrix(f, "W0.m");
  p.a0.v = read_matrix(f, "W0.v");
  p.a1.m = read_matrix(f, "W1.m");
  p.a1.v = read_matrix(f, "W1.v");
  p.ap1.m = read_matrix(f, "Wp1.m");
  p.ap1.v = read_matrix(f, "Wp1.v");
  p.ap2.m = read_matrix(f, "Wp2.m");
  p.ap2.v = read_matrix(f, "Wp2.v");
  if (p.W0.rows() != d)
    throw std::runtime_error("checkpoint: W0 shape disagrees with header");
  return p;
}

}  // namespace acgad
