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

#include "bvc/tape.hpp"

#include <algorithm>

#include "bvc/errors.hpp"

namespace bvc {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::multiply: return "multiply";
    case OpKind::scale: return "scale";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::softplus: return "softplus";
    case OpKind::softmax_rows: return "softmax-rows";
    case OpKind::log: return "log";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::cross_entropy: return "cross-entropy";
    case OpKind::kl_gaussian: return "kl-gaussian";
  }
  return "unknown";
}

void Tape::check_owned(Var v, const char* what) const {
  if (v.tape_ != this || v.index_ >= nodes_.size()) {
    throw ContractError(std::string(what) + ": variable does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const std::string& name, Tensor value) {
  if (parameters_.contains(name)) {
    throw ContractError("parameter '" + name + "' registered twice");
  }
  nodes_.push_back(Node{std::move(value), nullptr, {}, true});
  Var v(this, nodes_.size() - 1);
  parameters_.emplace(name, v);
  return v;
}

OpKind Tape::kind(Var v) const {
  check_owned(v, "kind");
  const auto& op = nodes_[v.index_].op;
  return op ? op->kind() : OpKind::leaf;
}

Var Tape::record(std::unique_ptr<Op> op, std::span<const Var> inputs) {
  std::vector<const Tensor*> values;
  std::vector<std::size_t> indices;
  values.reserve(inputs.size());
  indices.reserve(inputs.size());
  bool needs_grad = false;
  for (const Var& in : inputs) {
    check_owned(in, op_name(op->kind()));
    values.push_back(&nodes_[in.index_].value);
    indices.push_back(in.index_);
    needs_grad = needs_grad || nodes_[in.index_].requires_grad;
  }
  Tensor out = op->forward(values);
  nodes_.push_back(Node{std::move(out), std::move(op), std::move(indices), needs_grad});
  return Var(this, nodes_.size() - 1);
}

GradMap Tape::backward(Var output) {
  if (nodes_.empty()) throw StateError("backward called on an empty tape");
  check_owned(output, "backward");
  const Tensor& out_value = nodes_[output.index_].value;
  if (out_value.size() != 1) {
    throw ContractError("backward needs a scalar output, got shape " +
                        shape_string(out_value.shape()));
  }

  // Gradients are allocated on first touch and released once propagated.
  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> touched(nodes_.size(), 0);
  grads[output.index_] = Tensor::filled(out_value.shape(), 1.0);
  touched[output.index_] = 1;

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t i = output.index_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!touched[i] || !node.op || !node.requires_grad) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        if (!touched[in]) {
          grads[in] = Tensor(nodes_[in].value.shape());
          touched[in] = 1;
        }
        in_grads.push_back(&grads[in]);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.op->backward(in_values, node.value, grads[i], in_grads);
    grads[i] = Tensor();
  }

  GradMap result;
  for (const auto& [name, var] : parameters_) {
    if (touched[var.index_]) {
      result.emplace(name, std::move(grads[var.index_]));
    } else {
      result.emplace(name, Tensor(nodes_[var.index_].value.shape()));
    }
  }
  return result;
}

Tensor Tape::replay(Var output) const {
  check_owned(output, "replay");
  std::vector<Tensor> fresh(output.index_ + 1);
  std::vector<const Tensor*> in_values;
  for (std::size_t i = 0; i <= output.index_; ++i) {
    const Node& node = nodes_[i];
    if (!node.op) {
      fresh[i] = node.value;
      continue;
    }
    in_values.clear();
    for (std::size_t in : node.inputs) in_values.push_back(&fresh[in]);
    fresh[i] = node.op->forward(in_values);
  }
  return std::move(fresh[output.index_]);
}

}  // namespace bvc
