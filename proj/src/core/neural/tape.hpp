// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace molswap::nn {

using Mat = Eigen::MatrixXd;

// A trainable tensor. Values are kept in double for computation but are
// rounded to float32 after every optimizer step; m and v are Adam moments.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat m;
  Mat v;
  int group = 0;

  Param() = default;
  Param(std::string n, Mat init, int g = 0);
  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

// Reverse-mode tape over dense matrices. Every op appends a node holding its
// value and a closure that pushes the node's gradient to its inputs.
class Tape {
 public:
  using Var = int;

  Var constant(Mat value);
  Var param(Param& p);

  const Mat& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
  const Mat& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }
  double scalar(Var v) const { return value(v)(0, 0); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // elementwise
  Var add_row(Var x, Var row);           // x + broadcast 1 x c row
  Var scale(Var x, double s);
  Var scale_by(Var x, Var s);            // s is 1 x 1
  Var add_scalar(Var x, double s);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var abs(Var x);
  Var gather_rows(Var x, std::vector<int> idx);
  Var scatter_add_rows(Var x, std::vector<int> idx, int rows);
  Var concat_cols(const std::vector<Var>& parts);
  Var mean_rows(Var x);
  Var sum_all(Var x);

  // x W + b with W (in x out) and b (1 x out).
  Var linear(Var x, Param& w, Param& b);

  // Mean binary cross-entropy of probabilities p (k x 1) against labels.
  // Probabilities are clipped to [kClip, 1 - kClip] in the value; the
  // gradient passes through the clip unchanged.
  static constexpr double kClip = 1e-7;
  Var bce_mean(Var p, std::vector<double> labels);

  // Accumulates d(out)/d(inputs) into parameter gradients. out must be 1 x 1.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;
    Param* param = nullptr;
  };

  Var push(Mat value, std::function<void()> back = {});
  Mat& g(Var v) { return nodes_[static_cast<std::size_t>(v)].grad; }
  const Mat& val(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }

  std::vector<Node> nodes_;
};

}  // namespace molswap::nn
