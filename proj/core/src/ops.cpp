/*
 * Copyright 2026 The bvc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bvc/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "bvc/errors.hpp"

namespace bvc {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

Tape* common_tape(std::initializer_list<Var> vars, const char* op) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw ContractError(std::string(op) + ": unbound variable");
    if (tape == nullptr) tape = v.tape();
    if (v.tape() != tape) throw ContractError(std::string(op) + ": operands live on different tapes");
  }
  return tape;
}

void require_nonempty(const Tensor& t, const char* op) {
  if (t.size() == 0) throw DomainError(std::string(op) + ": empty tensor");
}

// Row/col view that treats rank-1 as a single row.
std::size_t row_count(const Tensor& t) { return t.rank() == 1 ? 1 : t.rows(); }
std::size_t col_count(const Tensor& t) { return t.rank() == 1 ? t.shape()[0] : t.cols(); }

class MatmulOp final : public Op {
 public:
  OpKind kind() const override { return OpKind::matmul; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    Tensor out({a.rows(), b.cols()});
    as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (grads[0]) as_matrix(*grads[0]).noalias() += as_matrix(g) * as_matrix(*in[1]).transpose();
    if (grads[1]) as_matrix(*grads[1]).noalias() += as_matrix(*in[0]).transpose() * as_matrix(g);
  }
};

class AddOp final : public Op {
 public:
  explicit AddOp(bool broadcast_rows) : broadcast_rows_(broadcast_rows) {}
  OpKind kind() const override { return OpKind::add; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    Tensor out = *in[0];
    auto o = out.data();
    auto b = in[1]->data();
    if (!broadcast_rows_) {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += b[i];
    } else {
      const std::size_t n = b.size();
      for (std::size_t r = 0; r < o.size(); r += n) {
        for (std::size_t c = 0; c < n; ++c) o[r + c] += b[c];
      }
    }
    return out;
  }
  void backward(std::span<const Tensor* const>, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    auto gd = g.data();
    if (grads[0]) {
      auto d = grads[0]->data();
      for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i];
    }
    if (grads[1]) {
      auto d = grads[1]->data();
      if (!broadcast_rows_) {
        for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i];
      } else {
        const std::size_t n = d.size();
        for (std::size_t r = 0; r < gd.size(); r += n) {
          for (std::size_t c = 0; c < n; ++c) d[c] += gd[r + c];
        }
      }
    }
  }

 private:
  bool broadcast_rows_;
};

class MultiplyOp final : public Op {
 public:
  OpKind kind() const override { return OpKind::multiply; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    Tensor out = *in[0];
    auto o = out.data();
    auto b = in[1]->data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= b[i];
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    auto gd = g.data();
    for (int k = 0; k < 2; ++k) {
      if (!grads[k]) continue;
      auto d = grads[k]->data();
      auto other = in[1 - k]->data();
      for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i] * other[i];
    }
  }
};

class ScaleOp final : public Op {
 public:
  explicit ScaleOp(double factor) : factor_(factor) {}
  OpKind kind() const override { return OpKind::scale; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    Tensor out = *in[0];
    for (double& v : out.data()) v *= factor_;
    return out;
  }
  void backward(std::span<const Tensor* const>, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    auto d = grads[0]->data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i) d[i] += factor_ * gd[i];
  }

 private:
  double factor_;
};

class ConcatOp final : public Op {
 public:
  explicit ConcatOp(std::size_t axis) : axis_(axis) {}
  OpKind kind() const override { return OpKind::concat; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    if (in[0]->rank() == 1) {
      std::vector<double> data;
      for (const Tensor* t : in) data.insert(data.end(), t->data().begin(), t->data().end());
      return Tensor::vector(std::move(data));
    }
    if (axis_ == 0) {
      std::size_t rows = 0;
      for (const Tensor* t : in) rows += t->rows();
      Tensor out({rows, in[0]->cols()});
      double* dst = out.data().data();
      for (const Tensor* t : in) {
        std::memcpy(dst, t->data().data(), t->size() * sizeof(double));
        dst += t->size();
      }
      return out;
    }
    const std::size_t rows = in[0]->rows();
    std::size_t cols = 0;
    for (const Tensor* t : in) cols += t->cols();
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = out.data().data() + r * cols;
      for (const Tensor* t : in) {
        const std::size_t c = t->cols();
        std::memcpy(dst, t->data().data() + r * c, c * sizeof(double));
        dst += c;
      }
    }
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor& out, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    const double* src = g.data().data();
    if (in[0]->rank() == 1 || axis_ == 0) {
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t n = in[k]->size();
        if (grads[k]) {
          auto d = grads[k]->data();
          for (std::size_t i = 0; i < n; ++i) d[i] += src[i];
        }
        src += n;
      }
      return;
    }
    const std::size_t rows = out.rows();
    const std::size_t cols = out.cols();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const std::size_t c = in[k]->cols();
      if (grads[k]) {
        auto d = grads[k]->data();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < c; ++j) d[r * c + j] += src[r * cols + offset + j];
        }
      }
      offset += c;
    }
  }

 private:
  std::size_t axis_;
};

class SliceOp final : public Op {
 public:
  SliceOp(std::size_t axis, std::size_t begin, std::size_t end)
      : axis_(axis), begin_(begin), end_(end) {}
  OpKind kind() const override { return OpKind::slice; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    const Tensor& a = *in[0];
    const std::size_t len = end_ - begin_;
    if (a.rank() == 1) {
      return Tensor::vector({a.data().begin() + begin_, a.data().begin() + end_});
    }
    if (axis_ == 0) {
      const std::size_t cols = a.cols();
      Tensor out({len, cols});
      std::memcpy(out.data().data(), a.data().data() + begin_ * cols, len * cols * sizeof(double));
      return out;
    }
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    Tensor out({rows, len});
    for (std::size_t r = 0; r < rows; ++r) {
      std::memcpy(out.data().data() + r * len, a.data().data() + r * cols + begin_,
                  len * sizeof(double));
    }
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    const Tensor& a = *in[0];
    auto d = grads[0]->data();
    auto gd = g.data();
    if (a.rank() == 1 || axis_ == 0) {
      const std::size_t stride = a.rank() == 1 ? 1 : a.cols();
      double* dst = d.data() + begin_ * stride;
      for (std::size_t i = 0; i < gd.size(); ++i) dst[i] += gd[i];
      return;
    }
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const std::size_t len = end_ - begin_;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < len; ++j) d[r * cols + begin_ + j] += gd[r * len + j];
    }
  }

 private:
  std::size_t axis_;
  std::size_t begin_;
  std::size_t end_;
};

// Elementwise map whose derivative is expressed through input x and output y.
template <OpKind Kind, double (*F)(double), double (*DF)(double, double)>
class UnaryOp final : public Op {
 public:
  OpKind kind() const override { return Kind; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    Tensor out = *in[0];
    for (double& v : out.data()) v = F(v);
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor& out, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    auto d = grads[0]->data();
    auto x = in[0]->data();
    auto y = out.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i) d[i] += gd[i] * DF(x[i], y[i]);
  }
};

double sigmoid_f(double x) { return stable_sigmoid(x); }
double sigmoid_df(double, double y) { return y * (1.0 - y); }
double tanh_f(double x) { return std::tanh(x); }
double tanh_df(double, double y) { return 1.0 - y * y; }
double softplus_f(double x) { return stable_softplus(x); }
double softplus_df(double x, double) { return stable_sigmoid(x); }
double log_f(double x) { return std::log(x); }
double log_df(double x, double) { return 1.0 / x; }

using SigmoidOp = UnaryOp<OpKind::sigmoid, sigmoid_f, sigmoid_df>;
using TanhOp = UnaryOp<OpKind::tanh, tanh_f, tanh_df>;
using SoftplusOp = UnaryOp<OpKind::softplus, softplus_f, softplus_df>;
using LogOp = UnaryOp<OpKind::log, log_f, log_df>;

class SoftmaxRowsOp final : public Op {
 public:
  OpKind kind() const override { return OpKind::softmax_rows; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    Tensor out = *in[0];
    const std::size_t rows = row_count(out);
    const std::size_t cols = col_count(out);
    auto o = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = o.data() + r * cols;
      const double mx = *std::max_element(row, row + cols);
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        row[c] = std::exp(row[c] - mx);
        total += row[c];
      }
      for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
    }
    return out;
  }
  void backward(std::span<const Tensor* const>, const Tensor& out, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    const std::size_t rows = row_count(out);
    const std::size_t cols = col_count(out);
    auto d = grads[0]->data();
    auto y = out.data();
    auto gd = g.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += gd[base + c] * y[base + c];
      for (std::size_t c = 0; c < cols; ++c) d[base + c] += y[base + c] * (gd[base + c] - dot);
    }
  }
};

class SumOp final : public Op {
 public:
  explicit SumOp(bool average) : average_(average) {}
  OpKind kind() const override { return average_ ? OpKind::mean : OpKind::sum; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    double total = 0.0;
    for (double v : in[0]->data()) total += v;
    if (average_) total /= static_cast<double>(in[0]->size());
    return Tensor::scalar(total);
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    double gv = g.item();
    if (average_) gv /= static_cast<double>(in[0]->size());
    for (double& d : grads[0]->data()) d += gv;
  }

 private:
  bool average_;
};

class CrossEntropyOp final : public Op {
 public:
  explicit CrossEntropyOp(std::vector<int> labels) : labels_(std::move(labels)) {}
  OpKind kind() const override { return OpKind::cross_entropy; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    const Tensor& z = *in[0];
    const std::size_t cols = z.cols();
    Tensor out({z.rows()});
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double* row = z.data().data() + r * cols;
      const double mx = *std::max_element(row, row + cols);
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - mx);
      out[r] = mx + std::log(total) - row[labels_[r]];
    }
    return out;
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    if (!grads[0]) return;
    const Tensor& z = *in[0];
    const std::size_t cols = z.cols();
    auto d = grads[0]->data();
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double* row = z.data().data() + r * cols;
      const double mx = *std::max_element(row, row + cols);
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - mx);
      for (std::size_t c = 0; c < cols; ++c) {
        const double p = std::exp(row[c] - mx) / total;
        const double target = static_cast<int>(c) == labels_[r] ? 1.0 : 0.0;
        d[r * cols + c] += g[r] * (p - target);
      }
    }
  }

 private:
  std::vector<int> labels_;
};

class KlGaussianOp final : public Op {
 public:
  explicit KlGaussianOp(double prior_sigma) : prior_sigma_(prior_sigma) {}
  OpKind kind() const override { return OpKind::kl_gaussian; }
  Tensor forward(std::span<const Tensor* const> in) const override {
    auto mu = in[0]->data();
    auto rho = in[1]->data();
    const double inv_var = 1.0 / (prior_sigma_ * prior_sigma_);
    const double log_prior = std::log(prior_sigma_);
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double sigma = stable_softplus(rho[i]);
      total += log_prior - std::log(sigma) + 0.5 * (sigma * sigma + mu[i] * mu[i]) * inv_var - 0.5;
    }
    return Tensor::scalar(total);
  }
  void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                std::span<Tensor* const> grads) const override {
    auto mu = in[0]->data();
    auto rho = in[1]->data();
    const double gv = g.item();
    const double inv_var = 1.0 / (prior_sigma_ * prior_sigma_);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (grads[0]) grads[0]->data()[i] += gv * mu[i] * inv_var;
      if (grads[1]) {
        const double sigma = stable_softplus(rho[i]);
        const double dsigma = -1.0 / sigma + sigma * inv_var;
        grads[1]->data()[i] += gv * dsigma * stable_sigmoid(rho[i]);
      }
    }
  }

 private:
  double prior_sigma_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) +
                         " does not match " + shape_string(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t lo, std::size_t hi, const char* op) {
  if (a.rank() < lo || a.rank() > hi) {
    throw DimensionError(std::string(op) + ": unsupported rank " + std::to_string(a.rank()) +
                         " for shape " + shape_string(a.shape()));
  }
}

Var record_unary(std::unique_ptr<Op> op, Var a, const char* name) {
  Tape* tape = common_tape({a}, name);
  const Var inputs[] = {a};
  return tape->record(std::move(op), inputs);
}

Var record_binary(std::unique_ptr<Op> op, Var a, Var b, const char* name) {
  Tape* tape = common_tape({a, b}, name);
  const Var inputs[] = {a, b};
  return tape->record(std::move(op), inputs);
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Var matmul(Var a, Var b) {
  common_tape({a, b}, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2) {
    throw DimensionError("matmul: operands must be rank 2, got " + shape_string(av.shape()) +
                         " and " + shape_string(bv.shape()));
  }
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " * " +
                         shape_string(bv.shape()));
  }
  require_nonempty(av, "matmul");
  require_nonempty(bv, "matmul");
  return record_binary(std::make_unique<MatmulOp>(), a, b, "matmul");
}

Var add(Var a, Var b) {
  common_tape({a, b}, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() == bv.shape()) return record_binary(std::make_unique<AddOp>(false), a, b, "add");
  if (av.rank() == 2 && bv.rank() == 1 && av.cols() == bv.shape()[0]) {
    return record_binary(std::make_unique<AddOp>(true), a, b, "add");
  }
  throw DimensionError("add: cannot combine " + shape_string(av.shape()) + " and " +
                       shape_string(bv.shape()));
}

Var multiply(Var a, Var b) {
  common_tape({a, b}, "multiply");
  require_same_shape(a.value(), b.value(), "multiply");
  return record_binary(std::make_unique<MultiplyOp>(), a, b, "multiply");
}

Var scale(Var a, double factor) {
  return record_unary(std::make_unique<ScaleOp>(factor), a, "scale");
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DomainError("concat: no operands");
  Tape* tape = parts[0].tape();
  for (const Var& p : parts) {
    if (!p.valid() || p.tape() != tape) throw ContractError("concat: operands live on different tapes");
  }
  const Tensor& first = parts[0].value();
  require_rank(first, 1, 2, "concat");
  if (axis > 1 || (first.rank() == 1 && axis != 0)) {
    throw DimensionError("concat: invalid axis " + std::to_string(axis));
  }
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (t.rank() != first.rank()) throw DimensionError("concat: operand ranks differ");
    if (t.rank() == 2) {
      const std::size_t keep = 1 - axis;
      if (t.shape()[keep] != first.shape()[keep]) {
        throw DimensionError("concat: " + shape_string(t.shape()) + " does not align with " +
                             shape_string(first.shape()) + " on axis " + std::to_string(axis));
      }
    }
  }
  return tape->record(std::make_unique<ConcatOp>(axis), parts);
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  common_tape({a}, "slice");
  const Tensor& av = a.value();
  require_rank(av, 1, 2, "slice");
  if (axis >= av.rank()) throw DimensionError("slice: axis " + std::to_string(axis) + " out of range");
  if (begin >= end || end > av.shape()[axis]) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for extent " + std::to_string(av.shape()[axis]));
  }
  return record_unary(std::make_unique<SliceOp>(axis, begin, end), a, "slice");
}

Var sigmoid(Var a) { return record_unary(std::make_unique<SigmoidOp>(), a, "sigmoid"); }
Var tanh(Var a) { return record_unary(std::make_unique<TanhOp>(), a, "tanh"); }
Var softplus(Var a) { return record_unary(std::make_unique<SoftplusOp>(), a, "softplus"); }

Var softmax_rows(Var a) {
  common_tape({a}, "softmax-rows");
  require_rank(a.value(), 1, 2, "softmax-rows");
  require_nonempty(a.value(), "softmax-rows");
  return record_unary(std::make_unique<SoftmaxRowsOp>(), a, "softmax-rows");
}

Var log(Var a) {
  common_tape({a}, "log");
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive entry " + std::to_string(v));
  }
  return record_unary(std::make_unique<LogOp>(), a, "log");
}

Var sum(Var a) { return record_unary(std::make_unique<SumOp>(false), a, "sum"); }

Var mean(Var a) {
  common_tape({a}, "mean");
  require_nonempty(a.value(), "mean");
  return record_unary(std::make_unique<SumOp>(true), a, "mean");
}

Var cross_entropy_rows(Var logits, std::span<const int> labels) {
  common_tape({logits}, "cross-entropy");
  const Tensor& z = logits.value();
  if (z.rank() != 2) throw DimensionError("cross-entropy: logits must be rank 2");
  if (z.rows() == 0) throw DomainError("cross-entropy: empty batch");
  if (labels.size() != z.rows()) {
    throw DimensionError("cross-entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(z.rows()) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= z.cols()) {
      throw DomainError("cross-entropy: label " + std::to_string(y) + " out of range");
    }
  }
  return record_unary(
      std::make_unique<CrossEntropyOp>(std::vector<int>(labels.begin(), labels.end())), logits,
      "cross-entropy");
}

Var kl_gaussian(Var mu, Var rho, double prior_sigma) {
  common_tape({mu, rho}, "kl-gaussian");
  if (!(prior_sigma > 0.0)) throw DomainError("kl-gaussian: prior sigma must be positive");
  require_same_shape(mu.value(), rho.value(), "kl-gaussian");
  return record_binary(std::make_unique<KlGaussianOp>(prior_sigma), mu, rho, "kl-gaussian");
}

}  // namespace bvc
