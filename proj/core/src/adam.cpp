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

#include "bvc/adam.hpp"

#include <cmath>

#include "bvc/errors.hpp"

namespace bvc {

std::pair<ParamTensors, AdamState> adam_step(const ParamTensors& params, const GradMap& grads,
                                             const AdamState& state) {
  for (const auto& [name, value] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw DimensionError("adam: no gradient for parameter '" + name + "'");
    if (g->second.shape() != value.shape()) {
      throw DimensionError("adam: gradient of '" + name + "' has shape " +
                           shape_string(g->second.shape()) + ", parameter has " +
                           shape_string(value.shape()));
    }
    if (!g->second.all_finite()) throw TrainingError("adam: non-finite gradient for parameter '" + name + "'");
  }

  AdamState next = state;
  next.step = state.step + 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(next.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  ParamTensors updated = params;
  for (auto& [name, value] : updated) {
    const Tensor& g = grads.at(name);
    auto m_it = next.m.try_emplace(name, value.shape()).first;
    auto v_it = next.v.try_emplace(name, value.shape()).first;
    auto theta = value.data();
    auto m = m_it->second.data();
    auto v = v_it->second.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  return {std::move(updated), std::move(next)};
}

}  // namespace bvc
