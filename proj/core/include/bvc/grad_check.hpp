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

#include <functional>
#include <map>
#include <string>

#include "bvc/tape.hpp"

namespace bvc {

using ParamVars = std::map<std::string, Var>;
using ParamTensors = std::map<std::string, Tensor>;

// Scalar function of named parameters, built on the given tape. It is called
// repeatedly and must be a pure function of the parameter values (freeze any
// random stream by copying it inside the callable).
using ScalarFn = std::function<Var(Tape&, const ParamVars&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
};

// Compares reverse-mode gradients against central differences with step
// `fd_step` for every entry of every parameter. The error of one entry is
// |analytic - numeric| / max(1, |analytic|).
GradCheckResult grad_check(const ScalarFn& f, const ParamTensors& params, double fd_step);

// Reverse-mode gradients of `f` at `params`.
GradMap evaluate_gradients(const ScalarFn& f, const ParamTensors& params, double* value = nullptr);

}  // namespace bvc
