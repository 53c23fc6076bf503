//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "chg/error.hpp"

namespace chg {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw TensorError(msg);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

Tensor::Tensor(int r, int c) {
  require(r >= 0 && c >= 0, "tensor dimensions must be non-negative");
  rows = r;
  cols = c;
  data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
}

Tensor Tensor::zeros(int r, int c) { return Tensor(r, c); }

Tensor Tensor::full(int r, int c, double v) {
  Tensor t(r, c);
  t.fill(v);
  return t;
}

Tensor Tensor::from(int r, int c, std::initializer_list<double> values) {
  return from(r, c, std::vector<double>(values));
}

Tensor Tensor::from(int r, int c, const std::vector<double>& values) {
  Tensor t(r, c);
  require(values.size() == t.data.size(),
          "tensor literal does not match its shape");
  t.data = values;
  return t;
}

void Tensor::fill(double v) {
  for (auto& x : data) x = v;
}

void Tape::check(Value v) const {
  require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()),
          "value does not belong to this tape");
}

Value Tape::make(Tensor val, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  if (needs_grad) {
    n.grad = Tensor::zeros(n.val.rows, n.val.cols);
    n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::input(Tensor t) { return make(std::move(t), false, nullptr); }

Value Tape::param(Parameter& p) {
  Value v = make(p.value, true, nullptr);
  nodes_[v.id].bound = &p;
  return v;
}

const Tensor& Tape::value(Value v) const {
  check(v);
  return nodes_[v.id].val;
}

const Tensor& Tape::grad(Value v) const {
  check(v);
  if (!nodes_[v.id].needs_grad) {
    // Constants carry no gradient storage; report zeros of the right shape.
    thread_local Tensor zero;
    zero = Tensor::zeros(nodes_[v.id].val.rows, nodes_[v.id].val.cols);
    return zero;
  }
  return nodes_[v.id].grad;
}

Value Tape::matmul(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(A.cols == B.rows, "matmul inner dimensions differ");
  Tensor out(A.rows, B.cols);
  const int n = A.rows, k = A.cols, m = B.cols;
  for (int i = 0; i < n; ++i) {
    const double* arow = A.data.data() + static_cast<std::size_t>(i) * k;
    double* orow = out.data.data() + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = B.data.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  const bool ng = needs(a) || needs(b);
  return make(std::move(out), ng, [a, b](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& B = t.nodes_[b.id].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    const int n = A.rows, k = A.cols, m = B.cols;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < n; ++i) {
        const double* grow = G.data.data() + static_cast<std::size_t>(i) * m;
        double* darow = dA.data.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
          const double* brow = B.data.data() + static_cast<std::size_t>(p) * m;
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
          darow[p] += acc;
        }
      }
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < n; ++i) {
        const double* arow = A.data.data() + static_cast<std::size_t>(i) * k;
        const double* grow = G.data.data() + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
          const double aip = arow[p];
          if (aip == 0.0) continue;
          double* dbrow = dB.data.data() + static_cast<std::size_t>(p) * m;
          for (int j = 0; j < m; ++j) dbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Value Tape::add(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(A.same_shape(B), "add shapes differ");
  Tensor out = A;
  for (int i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
  return make(std::move(out), needs(a) || needs(b), [a, b](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i];
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < G.size(); ++i) dB.data[i] += G.data[i];
    }
  });
}

Value Tape::sub(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(A.same_shape(B), "sub shapes differ");
  Tensor out = A;
  for (int i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
  return make(std::move(out), needs(a) || needs(b), [a, b](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i];
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < G.size(); ++i) dB.data[i] -= G.data[i];
    }
  });
}

Value Tape::mul(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(A.same_shape(B), "mul shapes differ");
  Tensor out = A;
  for (int i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
  return make(std::move(out), needs(a) || needs(b), [a, b](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& B = t.nodes_[b.id].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * B.data[i];
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < G.size(); ++i) dB.data[i] += G.data[i] * A.data[i];
    }
  });
}

Value Tape::scale(Value a, double s) {
  check(a);
  Tensor out = nodes_[a.id].val;
  for (auto& x : out.data) x *= s;
  return make(std::move(out), needs(a), [a, s](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.size(); ++i) dA.data[i] += s * G.data[i];
  });
}

Value Tape::mul_scalar(Value a, Value s) {
  check(a);
  check(s);
  const Tensor& S = nodes_[s.id].val;
  require(S.rows == 1 && S.cols == 1, "mul_scalar needs a 1x1 multiplier");
  const double sv = S.data[0];
  Tensor out = nodes_[a.id].val;
  for (auto& x : out.data) x *= sv;
  return make(std::move(out), needs(a) || needs(s), [a, s](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const double sv = t.nodes_[s.id].val.data[0];
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += sv * G.data[i];
    }
    if (t.needs(s)) {
      double acc = 0.0;
      for (int i = 0; i < G.size(); ++i) acc += G.data[i] * A.data[i];
      t.grad_mut(s).data[0] += acc;
    }
  });
}

Value Tape::add_rowvec(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(B.rows == 1 && B.cols == A.cols,
          "add_rowvec needs a 1xC bias matching the matrix width");
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(i, j) += B.data[j];
  return make(std::move(out), needs(a) || needs(b), [a, b](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i];
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < G.rows; ++i)
        for (int j = 0; j < G.cols; ++j) dB.data[j] += G.at(i, j);
    }
  });
}

Value Tape::mul_rowvec(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& A = nodes_[a.id].val;
  const Tensor& B = nodes_[b.id].val;
  require(B.rows == 1 && B.cols == A.cols,
          "mul_rowvec needs a 1xC vector matching the matrix width");
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(i, j) *= B.data[j];
  return make(std::move(out), needs(a) || needs(b), [a, b](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& B = t.nodes_[b.id].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    if (t.needs(a)) {
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.rows; ++i)
        for (int j = 0; j < G.cols; ++j) dA.at(i, j) += G.at(i, j) * B.data[j];
    }
    if (t.needs(b)) {
      Tensor& dB = t.grad_mut(b);
      for (int i = 0; i < G.rows; ++i)
        for (int j = 0; j < G.cols; ++j) dB.data[j] += G.at(i, j) * A.at(i, j);
    }
  });
}

Value Tape::relu(Value a) {
  check(a);
  Tensor out = nodes_[a.id].val;
  for (auto& x : out.data) x = x > 0.0 ? x : 0.0;
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    // Subgradient 0 at the kink.
    for (int i = 0; i < G.size(); ++i)
      if (A.data[i] > 0.0) dA.data[i] += G.data[i];
  });
}

Value Tape::sigmoid(Value a) {
  check(a);
  Tensor out = nodes_[a.id].val;
  for (auto& x : out.data) x = stable_sigmoid(x);
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& Y = t.nodes_[t.cursor_].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.size(); ++i) {
      const double y = Y.data[i];
      dA.data[i] += G.data[i] * y * (1.0 - y);
    }
  });
}

Value Tape::softplus(Value a) {
  check(a);
  Tensor out = nodes_[a.id].val;
  for (auto& x : out.data) x = stable_softplus(x);
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.size(); ++i)
      dA.data[i] += G.data[i] * stable_sigmoid(A.data[i]);
  });
}

Value Tape::row_log_sum_exp(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(A.cols > 0, "row_log_sum_exp of a zero-width matrix");
  Tensor out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
    double acc = 0.0;
    for (int j = 0; j < A.cols; ++j) acc += std::exp(A.at(i, j) - mx);
    out.data[i] = mx + std::log(acc);
  }
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& Y = t.nodes_[t.cursor_].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < A.rows; ++i) {
      const double gi = G.data[i];
      if (gi == 0.0) continue;
      for (int j = 0; j < A.cols; ++j)
        dA.at(i, j) += gi * std::exp(A.at(i, j) - Y.data[i]);
    }
  });
}

Value Tape::mean(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(A.size() > 0, "mean of an empty tensor");
  double acc = 0.0;
  for (double x : A.data) acc += x;
  Tensor out(1, 1);
  out.data[0] = acc / A.size();
  return make(std::move(out), needs(a), [a](Tape& t) {
    const double g =
        t.nodes_[t.cursor_].grad.data[0] / t.nodes_[a.id].val.size();
    Tensor& dA = t.grad_mut(a);
    for (auto& x : dA.data) x += g;
  });
}

Value Tape::sum(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  double acc = 0.0;
  for (double x : A.data) acc += x;
  Tensor out(1, 1);
  out.data[0] = acc;
  return make(std::move(out), needs(a), [a](Tape& t) {
    const double g = t.nodes_[t.cursor_].grad.data[0];
    Tensor& dA = t.grad_mut(a);
    for (auto& x : dA.data) x += g;
  });
}

Value Tape::concat_cols(const std::vector<Value>& vs) {
  require(!vs.empty(), "concat_cols needs at least one input");
  int rows = -1, cols = 0;
  bool ng = false;
  for (Value v : vs) {
    check(v);
    const Tensor& T = nodes_[v.id].val;
    if (rows < 0) rows = T.rows;
    require(T.rows == rows, "concat_cols row counts differ");
    cols += T.cols;
    ng = ng || needs(v);
  }
  Tensor out(rows, cols);
  int off = 0;
  for (Value v : vs) {
    const Tensor& T = nodes_[v.id].val;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < T.cols; ++j) out.at(i, off + j) = T.at(i, j);
    off += T.cols;
  }
  std::vector<Value> inputs = vs;
  return make(std::move(out), ng, [inputs](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    int off = 0;
    for (Value v : inputs) {
      const int c = t.nodes_[v.id].val.cols;
      if (t.needs(v)) {
        Tensor& dV = t.grad_mut(v);
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < c; ++j) dV.at(i, j) += G.at(i, off + j);
      }
      off += c;
    }
  });
}

Value Tape::slice_cols(Value a, int begin, int end) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(0 <= begin && begin < end && end <= A.cols,
          "slice_cols range out of bounds");
  Tensor out(A.rows, end - begin);
  for (int i = 0; i < A.rows; ++i)
    for (int j = begin; j < end; ++j) out.at(i, j - begin) = A.at(i, j);
  return make(std::move(out), needs(a), [a, begin](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.rows; ++i)
      for (int j = 0; j < G.cols; ++j) dA.at(i, begin + j) += G.at(i, j);
  });
}

Value Tape::l2_normalize_rows(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i) {
    double sq = 0.0;
    for (int j = 0; j < A.cols; ++j) sq += A.at(i, j) * A.at(i, j);
    if (sq == 0.0) continue;  // zero rows stay zero
    // Divide rather than multiply by a reciprocal: [3,4] must give exactly
    // [0.6,0.8].
    const double nrm = std::sqrt(sq);
    for (int j = 0; j < A.cols; ++j) out.at(i, j) /= nrm;
  }
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& A = t.nodes_[a.id].val;
    const Tensor& Y = t.nodes_[t.cursor_].val;
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < A.rows; ++i) {
      double sq = 0.0;
      for (int j = 0; j < A.cols; ++j) sq += A.at(i, j) * A.at(i, j);
      if (sq == 0.0) continue;
      const double nrm = std::sqrt(sq);
      double dot = 0.0;
      for (int j = 0; j < A.cols; ++j) dot += G.at(i, j) * Y.at(i, j);
      for (int j = 0; j < A.cols; ++j)
        dA.at(i, j) += (G.at(i, j) - dot * Y.at(i, j)) / nrm;
    }
  });
}

Value Tape::segment_sum(Value a, const std::vector<int>& ids, int n_segments) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(static_cast<int>(ids.size()) == A.rows,
          "segment_sum needs one segment id per row");
  require(n_segments >= 0, "segment_sum segment count is negative");
  for (int id : ids)
    require(0 <= id && id < n_segments, "segment id out of range");
  Tensor out(n_segments, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(ids[i], j) += A.at(i, j);
  std::vector<int> ids_copy = ids;
  return make(std::move(out), needs(a), [a, ids_copy](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < dA.rows; ++i)
      for (int j = 0; j < dA.cols; ++j) dA.at(i, j) += G.at(ids_copy[i], j);
  });
}

Value Tape::segment_mean(Value a, const std::vector<int>& ids,
                         int n_segments) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(static_cast<int>(ids.size()) == A.rows,
          "segment_mean needs one segment id per row");
  require(n_segments >= 0, "segment_mean segment count is negative");
  for (int id : ids)
    require(0 <= id && id < n_segments, "segment id out of range");
  std::vector<int> counts(n_segments, 0);
  for (int id : ids) counts[id]++;
  Tensor out(n_segments, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(ids[i], j) += A.at(i, j);
  for (int s = 0; s < n_segments; ++s) {
    if (counts[s] == 0) continue;  // empty pools stay zero rows
    const double inv = 1.0 / counts[s];
    for (int j = 0; j < A.cols; ++j) out.at(s, j) *= inv;
  }
  std::vector<int> ids_copy = ids;
  return make(std::move(out), needs(a), [a, ids_copy, counts](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < dA.rows; ++i) {
      const double inv = 1.0 / counts[ids_copy[i]];
      for (int j = 0; j < dA.cols; ++j)
        dA.at(i, j) += inv * G.at(ids_copy[i], j);
    }
  });
}

Value Tape::dropout(Value a, double p, Rng& rng) {
  check(a);
  require(p >= 0.0 && p < 1.0, "dropout rate must be in [0, 1)");
  const Tensor& A = nodes_[a.id].val;
  if (p == 0.0) {
    // Identity; consumes no randomness so eval-mode streams are unaffected.
    Tensor out = A;
    return make(std::move(out), needs(a), [a](Tape& t) {
      const Tensor& G = t.nodes_[t.cursor_].grad;
      Tensor& dA = t.grad_mut(a);
      for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i];
    });
  }
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(A.data.size());
  for (auto& m : mask) m = rng.next_double() >= p ? keep_scale : 0.0;
  Tensor out = A;
  for (int i = 0; i < out.size(); ++i) out.data[i] *= mask[i];
  return make(std::move(out), needs(a), [a, mask](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * mask[i];
  });
}

Value Tape::gather_rows(Value a, const std::vector<int>& idx) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  for (int i : idx)
    require(0 <= i && i < A.rows, "gather_rows index out of range");
  Tensor out(static_cast<int>(idx.size()), A.cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int j = 0; j < A.cols; ++j)
      out.at(static_cast<int>(i), j) = A.at(idx[i], j);
  std::vector<int> idx_copy = idx;
  return make(std::move(out), needs(a), [a, idx_copy](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (std::size_t i = 0; i < idx_copy.size(); ++i)
      for (int j = 0; j < G.cols; ++j)
        dA.at(idx_copy[i], j) += G.at(static_cast<int>(i), j);
  });
}

Value Tape::transpose(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  Tensor out(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(j, i) = A.at(i, j);
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.rows; ++i)
      for (int j = 0; j < G.cols; ++j) dA.at(j, i) += G.at(i, j);
  });
}

Value Tape::diag(Value a) {
  check(a);
  const Tensor& A = nodes_[a.id].val;
  require(A.rows == A.cols, "diag needs a square matrix");
  Tensor out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) out.data[i] = A.at(i, i);
  return make(std::move(out), needs(a), [a](Tape& t) {
    const Tensor& G = t.nodes_[t.cursor_].grad;
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < G.rows; ++i) dA.at(i, i) += G.data[i];
  });
}

void Tape::backward(Value loss) {
  check(loss);
  const Tensor& L = nodes_[loss.id].val;
  require(L.rows == 1 && L.cols == 1, "backward needs a 1x1 loss");
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad.fill(0.0);
  }
  if (!nodes_[loss.id].needs_grad) return;  // loss depends on no parameter
  nodes_[loss.id].grad.data[0] = 1.0;
  for (cursor_ = loss.id; cursor_ >= 0; --cursor_) {
    Node& n = nodes_[cursor_];
    if (!n.needs_grad) continue;
    if (n.back) n.back(*this);
    if (n.bound) {
      Tensor& pg = n.bound->grad;
      for (int i = 0; i < pg.size(); ++i) pg.data[i] += n.grad.data[i];
    }
  }
}

Tensor& AdamState::moment(std::vector<std::pair<std::string, Tensor>>& side,
                          const std::string& name, int rows, int cols) {
  for (auto& [n, t] : side) {
    if (n == name) {
      if (t.rows != rows || t.cols != cols)
        throw TensorError("optimizer moment shape differs for " + name);
      return t;
    }
  }
  side.emplace_back(name, Tensor::zeros(rows, cols));
  return side.back().second;
}

void adam_step(AdamState& state, const AdamConfig& cfg,
               const std::vector<Parameter*>& params) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (Parameter* p : params) {
    if (!p->value.same_shape(p->grad))
      throw TensorError("gradient shape differs for " + p->name);
    Tensor& m = state.moment(state.m, p->name, p->value.rows, p->value.cols);
    Tensor& v = state.moment(state.v, p->name, p->value.rows, p->value.cols);
    for (int i = 0; i < p->value.size(); ++i) {
      double g = p->grad.data[i];
      if (cfg.weight_decay != 0.0) {
        if (cfg.coupled_weight_decay) {
          g += cfg.weight_decay * p->value.data[i];
        } else {
          p->value.data[i] -= cfg.lr * cfg.weight_decay * p->value.data[i];
        }
      }
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g;
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p->value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad.fill(0.0);
}

double numeric_derivative(Tensor& x, int r, int c,
                          const std::function<double()>& f) {
  const double h = 1e-6;
  const double saved = x.at(r, c);
  x.at(r, c) = saved + h;
  const double up = f();
  x.at(r, c) = saved - h;
  const double down = f();
  x.at(r, c) = saved;
  return (up - down) / (2.0 * h);
}

}  // namespace chg
