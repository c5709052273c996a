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

#include "bvc/model.hpp"
#include "bvc/variational.hpp"

namespace bvc {

// Per-batch decomposition of the negative ELBO.
struct LossReport {
  double nll = 0.0;        // mean cross-entropy over the batch
  double kl = 0.0;         // KL(q || p) of the whole model
  double kl_weight = 0.0;  // 1 / batches per epoch
  double total = 0.0;      // nll + kl_weight * kl
};

struct Objective {
  LossReport report;
  Var total;   // differentiable total on the tape
  Var logits;  // [n x 2] from the same forward pass
};

// How the model KL is shared out across the minibatches of one epoch.
//   per_batch:   weight 1/M (M batches); summing `total` over an epoch counts
//                the KL once next to the sum of per-batch mean NLLs.
//   per_example: weight 1/N (N training examples); summing B_k * total over
//                the batches of an epoch gives sum_i nll_i + KL, the full
//                negative ELBO.
enum class KlScaling { per_batch, per_example };

const char* kl_scaling_name(KlScaling scaling);
KlScaling parse_kl_scaling(const std::string& name);
double kl_weight(KlScaling scaling, std::size_t num_batches, std::size_t num_examples);

// Minibatch negative ELBO: mean cross-entropy of the sampled-mode logits plus
// kl_weight * KL. For a deterministic head the KL term is zero and this is
// plain cross-entropy.
Objective elbo_minibatch(const ModelSpec& spec, const ParamVars& vars, Var input,
                         std::span<const int> labels, double kl_weight,
                         const GaussianPrior& prior, const ForwardOptions& options);

// Per-batch weighting, 1 / num_batches.
Objective elbo_minibatch(const ModelSpec& spec, const ParamVars& vars, Var input,
                         std::span<const int> labels, std::size_t num_batches,
                         const GaussianPrior& prior, const ForwardOptions& options);

// KL of every variational layer bound on the tape (scalar; zero for a
// deterministic head).
Var model_kl(const ModelSpec& spec, const ParamVars& vars, const GaussianPrior& prior, Tape& tape);

}  // namespace bvc
