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

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bvc/tensor.hpp"

namespace bvc {

enum class OpKind {
  leaf,
  matmul,
  add,
  multiply,
  scale,
  concat,
  slice,
  sigmoid,
  tanh,
  softplus,
  softmax_rows,
  log,
  sum,
  mean,
  cross_entropy,
  kl_gaussian,
};

const char* op_name(OpKind kind);

// A differentiable primitive. Implementations are stateless apart from
// construction-time attributes (axis, scale factor, labels...).
class Op {
 public:
  virtual ~Op() = default;
  virtual OpKind kind() const = 0;
  virtual Tensor forward(std::span<const Tensor* const> inputs) const = 0;
  // Adds d(loss)/d(input_k) into grad_inputs[k]; entries are null for inputs
  // that do not need a gradient.
  virtual void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                        const Tensor& grad_output,
                        std::span<Tensor* const> grad_inputs) const = 0;
};

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

using GradMap = std::map<std::string, Tensor>;

// Ordered record of primitive applications with a registry of named
// parameters. Single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Registers a trainable leaf. Names must be unique per tape.
  Var parameter(const std::string& name, Tensor value);

  // Evaluates `op` on the inputs' values and appends the application.
  Var record(std::unique_ptr<Op> op, std::span<const Var> inputs);

  // Reverse-mode sweep from a scalar output. Every registered parameter has
  // an entry in the result (zeros when the output does not depend on it).
  GradMap backward(Var output);

  // Recomputes every recorded op from its inputs and returns the fresh value
  // of `output`. Matches the recorded value bit for bit.
  Tensor replay(Var output) const;

  const Tensor& value(Var v) const { return nodes_[v.index_].value; }
  bool requires_grad(Var v) const { return nodes_[v.index_].requires_grad; }
  OpKind kind(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::map<std::string, Var>& parameters() const noexcept { return parameters_; }

 private:
  struct Node {
    Tensor value;
    std::unique_ptr<Op> op;  // null for leaves
    std::vector<std::size_t> inputs;
    bool requires_grad = false;
  };

  void check_owned(Var v, const char* what) const;

  std::vector<Node> nodes_;
  std::map<std::string, Var> parameters_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace bvc
