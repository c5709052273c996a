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

#include <cstdint>
#include <utility>

#include "bvc/grad_check.hpp"

namespace bvc {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments are keyed by parameter name and created (zeroed) on first use.
struct AdamState {
  AdamConfig config;
  ParamTensors m;
  ParamTensors v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
// Every parameter needs a same-shaped gradient; a non-finite gradient raises
// TrainingError naming the parameter and leaves the inputs untouched.
std::pair<ParamTensors, AdamState> adam_step(const ParamTensors& params, const GradMap& grads,
                                             const AdamState& state);

}  // namespace bvc
