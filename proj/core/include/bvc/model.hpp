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
#include <span>
#include <string>
#include <vector>

#include "bvc/grad_check.hpp"
#include "bvc/layers.hpp"
#include "bvc/pileup.hpp"
#include "bvc/random.hpp"
#include "bvc/tape.hpp"
#include "bvc/variational.hpp"

namespace bvc {

inline constexpr std::size_t kNumClasses = 2;

enum class HeadKind { deterministic, variational_flipout };

const char* head_name(HeadKind head);
HeadKind parse_head(const std::string& name);

// Architecture hyperparameters. The network is
//   BiLSTM(hidden1) -> BiLSTM(hidden2) -> final-step features
//   -> dense(dense_units, tanh) -> dense(2)
// with the two dense layers variational when head == variational_flipout.
struct ModelSpec {
  std::size_t depth = 100;  // sequence length d (reads)
  std::size_t width = 10;   // loci per half w
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::size_t dense_units = 32;
  HeadKind head = HeadKind::deterministic;

  // Features per step: 2w loci times the colour channels.
  std::size_t features() const { return 2 * width * kChannels; }

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

enum class WeightMode { mean, sampled };
enum class Perturbation { flipout, shared };

struct ForwardOptions {
  WeightMode mode = WeightMode::mean;
  Perturbation perturbation = Perturbation::flipout;
  Rng* rng = nullptr;  // required in sampled mode
};

// Spec plus named parameter tensors. Names:
//   lstm{1,2}.{fwd,bwd}.{kernel,recurrent,bias}
//   dense{1,2}.{kernel,bias}                   (deterministic head)
//   dense{1,2}.{kernel,bias}.{mu,rho}          (variational head)
class Model {
 public:
  Model(ModelSpec spec, ParamTensors params);

  // Kernels ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0 except the LSTM
  // forget gate (1), rho = softplus^-1(0.05).
  static Model initialize(const ModelSpec& spec, Rng& rng);

  // Names and shapes every model of this spec carries, in canonical order.
  static std::vector<std::pair<std::string, Shape>> layout(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ParamTensors& params() const noexcept { return params_; }
  ParamTensors& params() noexcept { return params_; }
  bool variational() const noexcept { return spec_.head == HeadKind::variational_flipout; }

  // Registers every tensor as a trainable parameter on the tape.
  ParamVars bind(Tape& tape) const;
  // Records every tensor as a constant (inference only).
  ParamVars bind_constants(Tape& tape) const;

  // Posterior of one variational layer, e.g. "dense1.kernel".
  GaussianVariationalParams posterior(const std::string& layer) const;

  // Names of the variational tensors grouped as (mu, rho) pairs.
  std::vector<std::string> variational_layers() const;

 private:
  ModelSpec spec_;
  ParamTensors params_;
};

// Stacks [d x f] sequences into the time-major batch layout [d*n x f]
// (row t*n + b is step t of sequence b).
Tensor stack_sequences(std::span<const Tensor> sequences);

// Final-step BiLSTM features, [n x 2*hidden2].
Var trunk_forward(const ModelSpec& spec, const ParamVars& vars, Var input, std::size_t batch);

// Dense head on trunk features; returns logits [n x 2].
Var head_forward(const ModelSpec& spec, const ParamVars& vars, Var features,
                 const ForwardOptions& options);

// Full network on a stacked batch; returns logits [n x 2].
Var model_forward(const ModelSpec& spec, const ParamVars& vars, Var input, std::size_t batch,
                  const ForwardOptions& options);

// Single-sequence convenience: x is [d x f]; returns logits [2].
Tensor model_forward(const Model& model, const Tensor& x, const ForwardOptions& options);

LstmVars lstm_vars(const ParamVars& vars, const std::string& prefix);
VariationalDenseVars variational_dense_vars(const ParamVars& vars, const std::string& prefix);

}  // namespace bvc
