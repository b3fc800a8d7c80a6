// SPDX-License-Identifier: Apache-2.0
#include "neural/model.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace molswap::nn {

std::string_view kind_name(ModelKind k) { return k == ModelKind::kDiffusion ? "diffusion" : "time"; }
std::string_view variant_name(Variant v) { return v == Variant::kBase ? "BASE" : "FPS"; }

Param& ModelWeights::add(std::string name, Mat init, int group) {
  if (has(name)) fail(ErrorCode::kInternal, "duplicate parameter " + name);
  params_.emplace_back(std::move(name), std::move(init), group);
  return params_.back();
}

Param& ModelWeights::at(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::kInternal, "no parameter named " + std::string(name));
}

const Param& ModelWeights::at(std::string_view name) const {
  return const_cast<ModelWeights*>(this)->at(name);
}

bool ModelWeights::has(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

std::size_t ModelWeights::parameter_count(int group) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.group == group) n += static_cast<std::size_t>(p.size());
  }
  return n;
}

void ModelWeights::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

float round_to_storage(double x) { return static_cast<float>(x); }

void round_to_storage(Mat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

namespace {

// Glorot-uniform weight matrix (in x out), rounded to float32.
Mat glorot(int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / (in + out));
  Mat w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
  round_to_storage(w);
  return w;
}

Mat zeros(int r, int c) { return Mat::Zero(r, c); }

void add_linear(ModelWeights& w, const std::string& name, int in, int out, Rng& rng, int group) {
  w.add(name + ".w", glorot(in, out, rng), group);
  w.add(name + ".b", zeros(1, out), group);
}

void add_pair_head(ModelWeights& w, const std::string& name, Rng& rng) {
  // First layer split by input block: (h_i + h_j), |h_i - h_j|, pair edge
  // features, condition. Glorot bound uses the full fan-in.
  const int fan_in = 2 * kEmbed + kPairEdgeDim + kCondDim;
  const double a = std::sqrt(6.0 / (fan_in + kHeadHidden));
  auto block = [&](int rows) {
    Mat m(rows, kHeadHidden);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    round_to_storage(m);
    return m;
  };
  w.add(name + ".w_sum", block(kEmbed), kGroupBase);
  w.add(name + ".w_diff", block(kEmbed), kGroupBase);
  w.add(name + ".w_edge", block(kPairEdgeDim), kGroupBase);
  w.add(name + ".w_cond", block(kCondDim), kGroupBase);
  w.add(name + ".b1", zeros(1, kHeadHidden), kGroupBase);
  add_linear(w, name + ".out", kHeadHidden, 1, rng, kGroupBase);
}

std::string layer_name(int l) { return "gine" + std::to_string(l); }

}  // namespace

ModelWeights init_diffusion(Variant variant, std::uint64_t seed) {
  Rng rng(mix_seed({seed, 0xd1ff}));
  ModelWeights w(ModelKind::kDiffusion, Variant::kBase);
  add_linear(w, "enc", feat::kNodeDim, kEmbed, rng, kGroupBase);
  for (int l = 0; l < 3; ++l) {
    const std::string p = layer_name(l);
    add_linear(w, p + ".edge", feat::kEdgeDim, kEmbed, rng, kGroupBase);
    add_linear(w, p + ".cond", kCondDim, kEmbed, rng, kGroupBase);
    w.add(p + ".eps", zeros(1, 1), kGroupBase);
    add_linear(w, p + ".mlp1", kEmbed, kHeadHidden, rng, kGroupBase);
    add_linear(w, p + ".mlp2", kHeadHidden, kEmbed, rng, kGroupBase);
    add_linear(w, p + ".post", kEmbed, kEmbed, rng, kGroupBase);
    add_linear(w, p + ".res", kEmbed, kEmbed, rng, kGroupBase);
  }
  add_pair_head(w, "form", rng);
  add_pair_head(w, "break", rng);
  if (variant == Variant::kFps) return upgrade_to_fps(w, seed);
  return w;
}

ModelWeights init_time(Variant variant, std::uint64_t seed) {
  Rng rng(mix_seed({seed, 0x7153}));
  ModelWeights w(ModelKind::kTime, Variant::kBase);
  for (int l = 0; l < 3; ++l) {
    const std::string p = layer_name(l);
    const int in = l == 0 ? feat::kNodeDim : kEmbed;
    add_linear(w, p + ".edge", feat::kEdgeDim, in, rng, kGroupBase);
    add_linear(w, p + ".cond", feat::kGraphDim, in, rng, kGroupBase);
    w.add(p + ".eps", zeros(1, 1), kGroupBase);
    add_linear(w, p + ".nn", in, kEmbed, rng, kGroupBase);
    if (l == 0) add_linear(w, p + ".res", in, kEmbed, rng, kGroupBase);
  }
  add_linear(w, "time.hidden", kEmbed, kTimeHidden, rng, kGroupBase);
  // Zero output weights: the untrained model predicts t = 0.5 for every graph.
  w.add("time.out.w", zeros(kTimeHidden, 1), kGroupBase);
  w.add("time.out.b", zeros(1, 1), kGroupBase);
  if (variant == Variant::kFps) return upgrade_to_fps(w, seed);
  return w;
}

ModelWeights upgrade_to_fps(const ModelWeights& base, std::uint64_t seed) {
  if (base.variant() != Variant::kBase) fail(ErrorCode::kVersionMismatch, "fingerprint upgrade expects BASE weights");
  Rng rng(mix_seed({seed, 0xf125}));
  ModelWeights w(base.kind(), Variant::kFps);
  for (const auto& p : base.params()) {
    Param& q = w.add(p.name, p.value, kGroupBase);
    q.m.setZero();
    q.v.setZero();
  }
  if (base.kind() == ModelKind::kDiffusion) {
    add_linear(w, "fps.l1", feat::kFingerprintBits, 1024, rng, kGroupFingerprint);
    add_linear(w, "fps.l2", 1024, 512, rng, kGroupFingerprint);
    add_linear(w, "fps.l3", 512, kFpsOut, rng, kGroupFingerprint);
    w.add("form.w_fps", zeros(kFpsOut, kHeadHidden), kGroupFingerprint);
    w.add("break.w_fps", zeros(kFpsOut, kHeadHidden), kGroupFingerprint);
  } else {
    add_linear(w, "fps.l1", feat::kFingerprintBits, 512, rng, kGroupFingerprint);
    add_linear(w, "fps.l2", 512, kFpsOut, rng, kGroupFingerprint);
    w.add("time.hidden.w_fps", zeros(kFpsOut, kTimeHidden), kGroupFingerprint);
  }
  return w;
}

int DiffusionScores::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle without the diagonal.
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

namespace {

void check_bundle(const feat::FeatureBundle& f) {
  if (f.X.rows() != f.n || f.X.cols() != feat::kNodeDim || f.E.cols() != feat::kEdgeDim ||
      f.E.rows() != static_cast<Eigen::Index>(f.bonds.size()) || f.g.size() != feat::kGraphDim) {
    fail(ErrorCode::kDimensionMismatch, "feature bundle does not match the model input widths (31/20/21)");
  }
}

void check_fingerprint(const ModelWeights& w, const feat::Fingerprint* fp) {
  if (w.variant() == Variant::kFps && fp == nullptr) {
    fail(ErrorCode::kDimensionMismatch, "FPS model requires a fingerprint");
  }
}

Mat fingerprint_row(const feat::Fingerprint& fp) {
  Mat m = Mat::Zero(1, feat::kFingerprintBits);
  for (int b = 0; b < feat::kFingerprintBits; ++b) {
    if (fp.test(static_cast<std::size_t>(b))) m(0, b) = 1.0;
  }
  return m;
}

struct Directed {
  std::vector<int> src, dst, row;
};

Directed directed_edges(const feat::FeatureBundle& f) {
  Directed d;
  for (std::size_t e = 0; e < f.bonds.size(); ++e) {
    const auto [a, b] = f.bonds[e];
    d.src.push_back(b);
    d.dst.push_back(a);
    d.row.push_back(static_cast<int>(e));
    d.src.push_back(a);
    d.dst.push_back(b);
    d.row.push_back(static_cast<int>(e));
  }
  return d;
}

// Aggregated messages relu(h_j + proj_e(E_ij) + proj_c(cond)) summed per target.
Tape::Var aggregate(Tape& tape, Tape::Var h, Tape::Var edge_proj, Tape::Var cond_proj, const Directed& d, int n) {
  const Tape::Var hj = tape.gather_rows(h, d.src);
  const Tape::Var ej = tape.gather_rows(edge_proj, d.row);
  const Tape::Var msg = tape.relu(tape.add_row(tape.add(hj, ej), cond_proj));
  return tape.scatter_add_rows(msg, d.dst, n);
}

Tape::Var self_term(Tape& tape, Tape::Var h, Param& eps) {
  return tape.scale_by(h, tape.add_scalar(tape.param(eps), 1.0));
}

Tape::Var fps_features(Tape& tape, ModelWeights& w, const feat::Fingerprint& fp, int layers) {
  Tape::Var x = tape.constant(fingerprint_row(fp));
  for (int l = 1; l <= layers; ++l) {
    const std::string p = "fps.l" + std::to_string(l);
    x = tape.relu(tape.linear(x, w.at(p + ".w"), w.at(p + ".b")));
  }
  return x;
}

// Shared pair head: rows are (i, j) pairs, edge_rows hold the 21-wide pair
// edge input.
Tape::Var pair_head(Tape& tape, ModelWeights& w, const std::string& name, Tape::Var h, Tape::Var summed,
                    const std::vector<int>& I, const std::vector<int>& J, Mat edge_rows, Tape::Var cond,
                    Tape::Var fps) {
  const Tape::Var s = tape.add(tape.gather_rows(summed, I), tape.gather_rows(summed, J));
  const Tape::Var diff = tape.abs(tape.sub(tape.gather_rows(h, I), tape.gather_rows(h, J)));
  const Tape::Var d = tape.matmul(diff, tape.param(w.at(name + ".w_diff")));
  const Tape::Var e = tape.matmul(tape.constant(std::move(edge_rows)), tape.param(w.at(name + ".w_edge")));
  Tape::Var row = tape.add_row(tape.matmul(cond, tape.param(w.at(name + ".w_cond"))), tape.param(w.at(name + ".b1")));
  if (fps >= 0) row = tape.add(row, tape.matmul(fps, tape.param(w.at(name + ".w_fps"))));
  const Tape::Var hidden = tape.relu(tape.add_row(tape.add(tape.add(s, d), e), row));
  return tape.sigmoid(tape.linear(hidden, w.at(name + ".out.w"), w.at(name + ".out.b")));
}

}  // namespace

Tape::Var embed_nodes(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w) {
  check_bundle(f);
  if (w.kind() != ModelKind::kDiffusion) fail(ErrorCode::kDimensionMismatch, "embed_nodes expects diffusion weights");
  const int n = f.n;
  Mat cond_m(1, kCondDim);
  cond_m.leftCols(feat::kGraphDim) = f.g.transpose();
  cond_m(0, feat::kGraphDim) = f.t;
  const Tape::Var cond = tape.constant(std::move(cond_m));
  const Tape::Var E = tape.constant(f.E);
  const Directed d = directed_edges(f);
  Tape::Var h = tape.relu(tape.linear(tape.constant(f.X), w.at("enc.w"), w.at("enc.b")));
  for (int l = 0; l < 3; ++l) {
    const std::string p = layer_name(l);
    const Tape::Var ep = tape.linear(E, w.at(p + ".edge.w"), w.at(p + ".edge.b"));
    const Tape::Var cp = tape.linear(cond, w.at(p + ".cond.w"), w.at(p + ".cond.b"));
    const Tape::Var agg = aggregate(tape, h, ep, cp, d, n);
    const Tape::Var z = tape.add(self_term(tape, h, w.at(p + ".eps")), agg);
    const Tape::Var u = tape.linear(tape.relu(tape.linear(z, w.at(p + ".mlp1.w"), w.at(p + ".mlp1.b"))),
                                    w.at(p + ".mlp2.w"), w.at(p + ".mlp2.b"));
    const Tape::Var v = tape.linear(tape.relu(u), w.at(p + ".post.w"), w.at(p + ".post.b"));
    h = tape.relu(tape.add(v, tape.linear(h, w.at(p + ".res.w"), w.at(p + ".res.b"))));
  }
  return h;
}

DiffusionScores diffusion_forward(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w,
                                  const feat::Fingerprint* fp) {
  check_fingerprint(w, fp);
  const Tape::Var h = embed_nodes(tape, f, w);
  const int n = f.n;
  DiffusionScores s;
  s.n = n;
  s.bonds = f.bonds;
  Mat cond_m(1, kCondDim);
  cond_m.leftCols(feat::kGraphDim) = f.g.transpose();
  cond_m(0, feat::kGraphDim) = f.t;
  const Tape::Var cond = tape.constant(std::move(cond_m));
  const Tape::Var fps = w.variant() == Variant::kFps ? fps_features(tape, w, *fp, 3) : -1;

  std::vector<int> I, J;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      s.pairs.emplace_back(i, j);
      I.push_back(i);
      J.push_back(j);
    }
  }
  if (!s.pairs.empty()) {
    Mat edge_rows = Mat::Zero(static_cast<Eigen::Index>(s.pairs.size()), kPairEdgeDim);
    for (std::size_t p = 0; p < s.pairs.size(); ++p) {
      const int r = f.edge_row(s.pairs[p].first, s.pairs[p].second);
      if (r < 0) continue;
      edge_rows.row(static_cast<Eigen::Index>(p)).head(feat::kEdgeDim) = f.E.row(r);
      edge_rows(static_cast<Eigen::Index>(p), feat::kEdgeDim) = 1.0;
    }
    const Tape::Var summed = tape.matmul(h, tape.param(w.at("form.w_sum")));
    s.p_form = pair_head(tape, w, "form", h, summed, I, J, std::move(edge_rows), cond, fps);
  }
  if (!s.bonds.empty()) {
    std::vector<int> BI, BJ;
    Mat edge_rows(static_cast<Eigen::Index>(s.bonds.size()), kPairEdgeDim);
    for (std::size_t e = 0; e < s.bonds.size(); ++e) {
      BI.push_back(s.bonds[e].first);
      BJ.push_back(s.bonds[e].second);
      edge_rows.row(static_cast<Eigen::Index>(e)).head(feat::kEdgeDim) = f.E.row(static_cast<Eigen::Index>(e));
      edge_rows(static_cast<Eigen::Index>(e), feat::kEdgeDim) = 1.0;
    }
    const Tape::Var summed = tape.matmul(h, tape.param(w.at("break.w_sum")));
    s.p_break = pair_head(tape, w, "break", h, summed, BI, BJ, std::move(edge_rows), cond, fps);
  }
  return s;
}

Tape::Var swap_scores(Tape& tape, const DiffusionScores& s, const feat::FeatureBundle& f,
                      const std::vector<diffusion::DesMove>& moves) {
  std::vector<int> b1, b2, f1, f2;
  for (const auto& m : moves) {
    const int e1 = f.edge_row(m.i, m.j);
    const int e2 = f.edge_row(m.k, m.l);
    if (e1 < 0 || e2 < 0) fail(ErrorCode::kDimensionMismatch, "move removes a bond that is not present");
    b1.push_back(e1);
    b2.push_back(e2);
    f1.push_back(s.pair_index(m.i, m.k));
    f2.push_back(s.pair_index(m.j, m.l));
  }
  const Tape::Var brk = tape.mul(tape.gather_rows(s.p_break, std::move(b1)), tape.gather_rows(s.p_break, std::move(b2)));
  const Tape::Var frm = tape.mul(tape.gather_rows(s.p_form, std::move(f1)), tape.gather_rows(s.p_form, std::move(f2)));
  return tape.mul(brk, frm);
}

Tape::Var time_forward(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w, const feat::Fingerprint* fp) {
  check_bundle(f);
  check_fingerprint(w, fp);
  if (w.kind() != ModelKind::kTime) fail(ErrorCode::kDimensionMismatch, "time_forward expects time weights");
  const int n = f.n;
  const Tape::Var cond = tape.constant(f.g.transpose());
  const Tape::Var E = tape.constant(f.E);
  const Directed d = directed_edges(f);
  Tape::Var h = tape.constant(f.X);
  for (int l = 0; l < 3; ++l) {
    const std::string p = layer_name(l);
    const Tape::Var ep = tape.linear(E, w.at(p + ".edge.w"), w.at(p + ".edge.b"));
    const Tape::Var cp = tape.linear(cond, w.at(p + ".cond.w"), w.at(p + ".cond.b"));
    const Tape::Var agg = aggregate(tape, h, ep, cp, d, n);
    const Tape::Var z = tape.add(self_term(tape, h, w.at(p + ".eps")), agg);
    const Tape::Var u = tape.relu(tape.linear(z, w.at(p + ".nn.w"), w.at(p + ".nn.b")));
    const Tape::Var res = l == 0 ? tape.linear(h, w.at(p + ".res.w"), w.at(p + ".res.b")) : h;
    h = tape.add(u, res);
  }
  const Tape::Var pooled = tape.mean_rows(h);
  Tape::Var hidden = tape.linear(pooled, w.at("time.hidden.w"), w.at("time.hidden.b"));
  if (w.variant() == Variant::kFps) {
    const Tape::Var fps = fps_features(tape, w, *fp, 2);
    hidden = tape.add(hidden, tape.matmul(fps, tape.param(w.at("time.hidden.w_fps"))));
  }
  return tape.sigmoid(tape.linear(tape.relu(hidden), w.at("time.out.w"), w.at("time.out.b")));
}

Tape::Var diffusion_loss(Tape& tape, const DiffusionScores& s, const feat::FeatureBundle& f,
                         const chem::MolGraph& g0, const std::vector<diffusion::DesMove>& feasible,
                         const diffusion::DesMove& reverse, const LossWeights& lw, LossBreakdown* out) {
  if (g0.atom_count() != s.n) fail(ErrorCode::kDimensionMismatch, "reference graph size differs from scored graph");
  LossBreakdown lb;
  std::vector<Tape::Var> terms;
  std::vector<double> weights;
  if (s.p_form >= 0) {
    std::vector<double> y;
    y.reserve(s.pairs.size());
    for (const auto& [i, j] : s.pairs) y.push_back(g0.bonded(i, j) ? 1.0 : 0.0);
    const Tape::Var l = tape.bce_mean(s.p_form, std::move(y));
    lb.l_form = tape.scalar(l);
    terms.push_back(l);
    weights.push_back(lw.form);
  }
  if (s.p_break >= 0) {
    std::vector<double> y;
    for (const auto& [i, j] : s.bonds) y.push_back(g0.bonded(i, j) ? 0.0 : 1.0);
    const Tape::Var l = tape.bce_mean(s.p_break, std::move(y));
    lb.l_break = tape.scalar(l);
    terms.push_back(l);
    weights.push_back(lw.brk);
  }
  if (feasible.empty()) {
    lb.des_masked = true;
  } else {
    const auto key = reverse.canonical_key();
    std::vector<double> y;
    y.reserve(feasible.size());
    for (const auto& m : feasible) y.push_back(m.canonical_key() == key ? 1.0 : 0.0);
    const Tape::Var q = swap_scores(tape, s, f, feasible);
    const Tape::Var l = tape.bce_mean(q, std::move(y));
    lb.l_des = tape.scalar(l);
    terms.push_back(l);
    weights.push_back(lw.des);
  }
  if (terms.empty()) fail(ErrorCode::kDimensionMismatch, "no loss terms for an empty graph");
  Tape::Var total = tape.scale(terms[0], weights[0]);
  for (std::size_t k = 1; k < terms.size(); ++k) total = tape.add(total, tape.scale(terms[k], weights[k]));
  lb.total = tape.scalar(total);
  if (out) *out = lb;
  return total;
}

Tape::Var time_loss(Tape& tape, Tape::Var t_pred, double t_real) {
  const Tape::Var diff = tape.add_scalar(t_pred, -t_real);
  return tape.mul(diff, diff);
}

}  // namespace molswap::nn
