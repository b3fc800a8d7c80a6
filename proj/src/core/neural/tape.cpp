// SPDX-License-Identifier: Apache-2.0
#include "neural/tape.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace molswap::nn {

Param::Param(std::string n, Mat init, int g)
    : name(std::move(n)),
      value(std::move(init)),
      grad(Mat::Zero(value.rows(), value.cols())),
      m(Mat::Zero(value.rows(), value.cols())),
      v(Mat::Zero(value.rows(), value.cols())),
      group(g) {}

namespace {

void check_same(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::kDimensionMismatch, std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                            std::to_string(b.cols()));
  }
}

}  // namespace

Tape::Var Tape::push(Mat value, std::function<void()> back) {
  Node node;
  node.grad = Mat::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Mat value) { return push(std::move(value)); }

Tape::Var Tape::param(Param& p) {
  const Var v = push(p.value);
  nodes_.back().param = &p;
  return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
  if (val(a).cols() != val(b).rows()) {
    fail(ErrorCode::kDimensionMismatch, "matmul: " + std::to_string(val(a).cols()) + " vs " +
                                            std::to_string(val(b).rows()));
  }
  const Var out = push(val(a) * val(b));
  nodes_.back().back = [this, a, b, out] {
    g(a).noalias() += g(out) * val(b).transpose();
    g(b).noalias() += val(a).transpose() * g(out);
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  check_same(val(a), val(b), "add");
  const Var out = push(val(a) + val(b));
  nodes_.back().back = [this, a, b, out] {
    g(a) += g(out);
    g(b) += g(out);
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  check_same(val(a), val(b), "sub");
  const Var out = push(val(a) - val(b));
  nodes_.back().back = [this, a, b, out] {
    g(a) += g(out);
    g(b) -= g(out);
  };
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  check_same(val(a), val(b), "mul");
  const Var out = push(val(a).cwiseProduct(val(b)));
  nodes_.back().back = [this, a, b, out] {
    g(a) += g(out).cwiseProduct(val(b));
    g(b) += g(out).cwiseProduct(val(a));
  };
  return out;
}

Tape::Var Tape::add_row(Var x, Var row) {
  if (val(row).rows() != 1 || val(row).cols() != val(x).cols()) {
    fail(ErrorCode::kDimensionMismatch, "add_row: row is " + std::to_string(val(row).rows()) + "x" +
                                            std::to_string(val(row).cols()) + ", input has " +
                                            std::to_string(val(x).cols()) + " columns");
  }
  Mat v = val(x);
  v.rowwise() += val(row).row(0);
  const Var out = push(std::move(v));
  nodes_.back().back = [this, x, row, out] {
    g(x) += g(out);
    g(row) += g(out).colwise().sum();
  };
  return out;
}

Tape::Var Tape::scale(Var x, double s) {
  const Var out = push(val(x) * s);
  nodes_.back().back = [this, x, s, out] { g(x) += g(out) * s; };
  return out;
}

Tape::Var Tape::scale_by(Var x, Var s) {
  if (val(s).size() != 1) fail(ErrorCode::kDimensionMismatch, "scale_by expects a 1x1 factor");
  const Var out = push(val(x) * val(s)(0, 0));
  nodes_.back().back = [this, x, s, out] {
    g(x) += g(out) * val(s)(0, 0);
    g(s)(0, 0) += g(out).cwiseProduct(val(x)).sum();
  };
  return out;
}

Tape::Var Tape::add_scalar(Var x, double s) {
  const Var out = push(val(x).array() + s);
  nodes_.back().back = [this, x, out] { g(x) += g(out); };
  return out;
}

Tape::Var Tape::relu(Var x) {
  const Var out = push(val(x).cwiseMax(0.0));
  nodes_.back().back = [this, x, out] {
    g(x).array() += (val(x).array() > 0.0).select(g(out).array(), 0.0);
  };
  return out;
}

Tape::Var Tape::sigmoid(Var x) {
  Mat s = val(x).unaryExpr([](double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  });
  const Var out = push(std::move(s));
  nodes_.back().back = [this, x, out] {
    g(x).array() += g(out).array() * val(out).array() * (1.0 - val(out).array());
  };
  return out;
}

Tape::Var Tape::abs(Var x) {
  const Var out = push(val(x).cwiseAbs());
  nodes_.back().back = [this, x, out] {
    g(x).array() += g(out).array() * val(x).array().sign();
  };
  return out;
}

Tape::Var Tape::gather_rows(Var x, std::vector<int> idx) {
  const Mat& src = val(x);
  Mat v(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= src.rows()) fail(ErrorCode::kDimensionMismatch, "gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(r)) = src.row(idx[r]);
  }
  const Var out = push(std::move(v));
  nodes_.back().back = [this, x, idx = std::move(idx), out] {
    Mat& gx = g(x);
    const Mat& go = g(out);
    for (std::size_t r = 0; r < idx.size(); ++r) gx.row(idx[r]) += go.row(static_cast<Eigen::Index>(r));
  };
  return out;
}

Tape::Var Tape::scatter_add_rows(Var x, std::vector<int> idx, int rows) {
  const Mat& src = val(x);
  if (static_cast<Eigen::Index>(idx.size()) != src.rows()) {
    fail(ErrorCode::kDimensionMismatch, "scatter_add_rows: index count differs from row count");
  }
  Mat v = Mat::Zero(rows, src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= rows) fail(ErrorCode::kDimensionMismatch, "scatter_add_rows: index out of range");
    v.row(idx[r]) += src.row(static_cast<Eigen::Index>(r));
  }
  const Var out = push(std::move(v));
  nodes_.back().back = [this, x, idx = std::move(idx), out] {
    Mat& gx = g(x);
    const Mat& go = g(out);
    for (std::size_t r = 0; r < idx.size(); ++r) gx.row(static_cast<Eigen::Index>(r)) += go.row(idx[r]);
  };
  return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::kDimensionMismatch, "concat_cols: no inputs");
  const Eigen::Index rows = val(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (val(p).rows() != rows) fail(ErrorCode::kDimensionMismatch, "concat_cols: row counts differ");
    cols += val(p).cols();
  }
  Mat v(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    v.middleCols(c, val(p).cols()) = val(p);
    c += val(p).cols();
  }
  const Var out = push(std::move(v));
  nodes_.back().back = [this, parts, out] {
    Eigen::Index c0 = 0;
    for (Var p : parts) {
      g(p) += g(out).middleCols(c0, val(p).cols());
      c0 += val(p).cols();
    }
  };
  return out;
}

Tape::Var Tape::mean_rows(Var x) {
  const Eigen::Index rows = val(x).rows();
  if (rows == 0) fail(ErrorCode::kDimensionMismatch, "mean_rows of an empty matrix");
  const Var out = push(val(x).colwise().mean());
  nodes_.back().back = [this, x, rows, out] {
    g(x).rowwise() += g(out).row(0) / static_cast<double>(rows);
  };
  return out;
}

Tape::Var Tape::sum_all(Var x) {
  Mat v(1, 1);
  v(0, 0) = val(x).sum();
  const Var out = push(std::move(v));
  nodes_.back().back = [this, x, out] { g(x).array() += g(out)(0, 0); };
  return out;
}

Tape::Var Tape::linear(Var x, Param& w, Param& b) {
  return add_row(matmul(x, param(w)), param(b));
}

Tape::Var Tape::bce_mean(Var p, std::vector<double> labels) {
  const Mat& pv = val(p);
  if (pv.cols() != 1 || pv.rows() != static_cast<Eigen::Index>(labels.size()) || labels.empty()) {
    fail(ErrorCode::kDimensionMismatch, "bce_mean: probabilities and labels differ in length");
  }
  const double k = static_cast<double>(labels.size());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < pv.rows(); ++r) {
    const double q = std::clamp(pv(r, 0), kClip, 1.0 - kClip);
    const double y = labels[static_cast<std::size_t>(r)];
    loss -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
  }
  Mat v(1, 1);
  v(0, 0) = loss / k;
  const Var out = push(std::move(v));
  nodes_.back().back = [this, p, labels = std::move(labels), k, out] {
    const double go = g(out)(0, 0);
    const Mat& pv2 = val(p);
    Mat& gp = g(p);
    for (Eigen::Index r = 0; r < pv2.rows(); ++r) {
      const double q = std::clamp(pv2(r, 0), kClip, 1.0 - kClip);
      const double y = labels[static_cast<std::size_t>(r)];
      gp(r, 0) += go * (-(y / q) + (1.0 - y) / (1.0 - q)) / k;
    }
  };
  return out;
}

void Tape::backward(Var out) {
  if (val(out).size() != 1) fail(ErrorCode::kDimensionMismatch, "backward expects a scalar output");
  for (auto& node : nodes_) node.grad.setZero();
  g(out)(0, 0) = 1.0;
  for (Var v = out; v >= 0; --v) {
    Node& node = nodes_[static_cast<std::size_t>(v)];
    if (node.back) node.back();
    if (node.param) node.param->grad += node.grad;
  }
}

}  // namespace molswap::nn
