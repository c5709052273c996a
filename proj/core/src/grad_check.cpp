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

#include "bvc/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "bvc/errors.hpp"

namespace bvc {
namespace {

double evaluate(const ScalarFn& f, const ParamTensors& params) {
  Tape tape;
  ParamVars vars;
  for (const auto& [name, value] : params) vars.emplace(name, tape.parameter(name, value));
  const double v = f(tape, vars).value().item();
  if (!std::isfinite(v)) throw DomainError("grad_check: function evaluated to a non-finite value");
  return v;
}

}  // namespace

GradMap evaluate_gradients(const ScalarFn& f, const ParamTensors& params, double* value) {
  Tape tape;
  ParamVars vars;
  for (const auto& [name, v] : params) vars.emplace(name, tape.parameter(name, v));
  Var out = f(tape, vars);
  if (value) *value = out.value().item();
  return tape.backward(out);
}

GradCheckResult grad_check(const ScalarFn& f, const ParamTensors& params, double fd_step) {
  if (!(fd_step > 0.0)) throw DomainError("grad_check: step must be positive");
  double base = 0.0;
  const GradMap analytic = evaluate_gradients(f, params, &base);
  if (!std::isfinite(base)) throw DomainError("grad_check: function evaluated to a non-finite value");

  GradCheckResult result;
  ParamTensors probe = params;
  for (const auto& [name, value] : params) {
    const Tensor& grad = analytic.at(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value[i];
      probe[name][i] = original + fd_step;
      const double up = evaluate(f, probe);
      probe[name][i] = original - fd_step;
      const double down = evaluate(f, probe);
      probe[name][i] = original;

      const double numeric = (up - down) / (2.0 * fd_step);
      const double err = std::abs(grad[i] - numeric) / std::max(1.0, std::abs(grad[i]));
      if (err >= result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace bvc
