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

#include "bvc/objective.hpp"

#include <cmath>

#include "bvc/errors.hpp"
#include "bvc/ops.hpp"

namespace bvc {

Var model_kl(const ModelSpec& spec, const ParamVars& vars, const GaussianPrior& prior, Tape& tape) {
  if (!(prior.sigma > 0.0)) throw DomainError("elbo: prior sigma must be positive");
  if (spec.head == HeadKind::deterministic) return tape.constant(Tensor::scalar(0.0));
  Var total;
  for (const char* layer : {"dense1", "dense2"}) {
    const VariationalDenseVars v = variational_dense_vars(vars, layer);
    for (Var term : {kl_gaussian(v.kernel_mu, v.kernel_rho, prior.sigma),
                     kl_gaussian(v.bias_mu, v.bias_rho, prior.sigma)}) {
      total = total.valid() ? add(total, term) : term;
    }
  }
  return total;
}

const char* kl_scaling_name(KlScaling scaling) {
  return scaling == KlScaling::per_batch ? "batch" : "example";
}

KlScaling parse_kl_scaling(const std::string& name) {
  if (name == "batch") return KlScaling::per_batch;
  if (name == "example") return KlScaling::per_example;
  throw UsageError("unknown KL scaling '" + name + "' (expected batch or example)");
}

double kl_weight(KlScaling scaling, std::size_t num_batches, std::size_t num_examples) {
  const std::size_t denom = scaling == KlScaling::per_batch ? num_batches : num_examples;
  if (denom == 0) throw DomainError("elbo: KL weight denominator must be at least 1");
  return 1.0 / static_cast<double>(denom);
}

Objective elbo_minibatch(const ModelSpec& spec, const ParamVars& vars, Var input,
                         std::span<const int> labels, std::size_t num_batches,
                         const GaussianPrior& prior, const ForwardOptions& options) {
  return elbo_minibatch(spec, vars, input, labels, kl_weight(KlScaling::per_batch, num_batches, 1),
                        prior, options);
}

Objective elbo_minibatch(const ModelSpec& spec, const ParamVars& vars, Var input,
                         std::span<const int> labels, double weight,
                         const GaussianPrior& prior, const ForwardOptions& options) {
  if (labels.empty()) throw DomainError("elbo: empty batch");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw DomainError("elbo: KL weight must be finite and non-negative");
  Tape& tape = *input.tape();

  Var logits = model_forward(spec, vars, input, labels.size(), options);
  Var nll = mean(cross_entropy_rows(logits, labels));
  Var kl = model_kl(spec, vars, prior, tape);
  Var total = add(nll, scale(kl, weight));

  Objective out;
  out.report.nll = nll.value().item();
  out.report.kl = kl.value().item();
  out.report.kl_weight = weight;
  out.report.total = total.value().item();
  out.total = total;
  out.logits = logits;
  return out;
}

}  // namespace bvc
