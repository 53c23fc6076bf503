//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_TENSOR_HPP
#define CHG_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "chg/rng.hpp"

namespace chg {

// Dense row-major matrix of 64-bit reals. All machine-learning state in this
// library is rank 2; vectors are 1xN or Nx1 and scalars are 1x1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c);

  static Tensor zeros(int r, int c);
  static Tensor full(int r, int c, double v);
  // Row-major literal; throws TensorError unless values.size() == r*c.
  static Tensor from(int r, int c, std::initializer_list<double> values);
  static Tensor from(int r, int c, const std::vector<double>& values);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  void fill(double v);
};

// A named trainable tensor. `grad` always has the value's shape and is
// accumulated into by Tape::backward; the training loop zeroes it between
// optimizer steps.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), grad(Tensor::zeros(v.rows, v.cols)) {
    value = std::move(v);
  }
};

// Handle to a node on a Tape. Only meaningful for the Tape that produced it.
struct Value {
  int id = -1;
};

// Records a forward computation and replays it in reverse for gradients.
// Build one Tape per forward pass: leaves enter via input() or param(), ops
// append nodes in topological order, and backward() fills gradients.
//
// Single-writer: a Tape must not be shared across threads while recording.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Constant leaf (no gradient flows into it).
  Value input(Tensor t);
  // Trainable leaf. The parameter must outlive the Tape; backward() adds the
  // computed gradient into p.grad.
  Value param(Parameter& p);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  // Elementwise product of same-shape tensors.
  Value mul(Value a, Value b);
  // Constant scalar multiple.
  Value scale(Value a, double s);
  // Multiply every element of `a` by the 1x1 value `s`.
  Value mul_scalar(Value a, Value s);
  // Broadcast-add a 1xC row vector to every row of an NxC matrix.
  Value add_rowvec(Value a, Value b);
  // Broadcast-multiply every row of an NxC matrix by a 1xC row vector.
  Value mul_rowvec(Value a, Value b);
  Value relu(Value a);
  Value sigmoid(Value a);
  // log(1 + exp(x)), evaluated stably.
  Value softplus(Value a);
  // Per-row log-sum-exp of an NxM matrix; result is Nx1.
  Value row_log_sum_exp(Value a);
  // Full reductions to 1x1.
  Value mean(Value a);
  Value sum(Value a);
  // Horizontal concatenation of matrices with equal row counts.
  Value concat_cols(const std::vector<Value>& vs);
  // Columns [begin, end) as a new matrix.
  Value slice_cols(Value a, int begin, int end);
  // Rows scaled to unit Euclidean norm; all-zero rows stay zero.
  Value l2_normalize_rows(Value a);
  // out[s] = sum of rows i with ids[i] == s; out is n_segments x C. Rows of
  // empty segments are zero.
  Value segment_sum(Value a, const std::vector<int>& ids, int n_segments);
  // Like segment_sum but averaged; empty segments stay zero rows.
  Value segment_mean(Value a, const std::vector<int>& ids, int n_segments);
  // Inverted-scaling train-time dropout. Draws one uniform per element in
  // row-major order from `rng`; p = 0 draws nothing and is the identity.
  Value dropout(Value a, double p, Rng& rng);
  // out[i] = a[idx[i]]; indices may repeat.
  Value gather_rows(Value a, const std::vector<int>& idx);
  Value transpose(Value a);
  // Main diagonal of a square matrix as Nx1.
  Value diag(Value a);

  const Tensor& value(Value v) const;
  // Gradient of the last backward() with respect to node v; zeros if the
  // node is not on the loss path.
  const Tensor& grad(Value v) const;

  // Reverse pass from a 1x1 loss node. Node gradients are reset first;
  // Parameter::grad is accumulated, not reset.
  void backward(Value loss);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

private:
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void(Tape&)> back;
  };

  Value make(Tensor val, bool needs_grad, std::function<void(Tape&)> back);
  Tensor& grad_mut(Value v) { return nodes_[v.id].grad; }
  bool needs(Value v) const { return nodes_[v.id].needs_grad; }
  void check(Value v) const;

  std::vector<Node> nodes_;
  // Index of the node whose backward rule is currently running; lets the
  // rule reach its own value/gradient without capturing the id at build time.
  int cursor_ = -1;
};

// Adam hyperparameters. Weight decay is decoupled by default (applied to the
// parameter directly, not through the gradient); `coupled_weight_decay`
// switches to the classic L2-in-gradient form.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool coupled_weight_decay = false;
};

// First/second moment estimates keyed by parameter name, plus the shared
// step count. Serialized into checkpoints so training resumes exactly.
struct AdamState {
  long long step = 0;
  std::vector<std::pair<std::string, Tensor>> m;
  std::vector<std::pair<std::string, Tensor>> v;

  Tensor& moment(std::vector<std::pair<std::string, Tensor>>& side,
                 const std::string& name, int rows, int cols);
};

// One optimizer step over `params` from their accumulated gradients.
// Gradients are left untouched; callers zero them for the next batch.
void adam_step(AdamState& state, const AdamConfig& cfg,
               const std::vector<Parameter*>& params);

void zero_grads(const std::vector<Parameter*>& params);

// Central-difference derivative of `f` at x along (r,c), h = 1e-6. `x` is
// restored before returning. Test helper shared by the gradient-check suites.
double numeric_derivative(Tensor& x, int r, int c,
                          const std::function<double()>& f);

}  // namespace chg

#endif  // CHG_TENSOR_HPP
