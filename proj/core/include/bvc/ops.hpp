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
#include <vector>

#include "bvc/tape.hpp"

namespace bvc {

// Differentiable primitives. Each evaluates eagerly and records itself on the
// tape that owns its operands. All operands of one call must share a tape.

// [m x k] * [k x n] -> [m x n]
Var matmul(Var a, Var b);

// Elementwise sum of equal shapes, or [m x n] + [n] with the vector added to
// every row.
Var add(Var a, Var b);

// Elementwise product of equal shapes.
Var multiply(Var a, Var b);

// factor * a
Var scale(Var a, double factor);

// Concatenation of rank-2 operands along axis 0 (rows) or 1 (columns);
// rank-1 operands concatenate end to end with axis 0.
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);

// Half-open range [begin, end) along `axis` of a rank-1 or rank-2 operand.
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);

Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);

// Row-wise softmax with max subtraction; a rank-1 operand is one row.
Var softmax_rows(Var a);

// Natural log; every entry must be positive.
Var log(Var a);

// Sum / mean of all entries, as a scalar.
Var sum(Var a);
Var mean(Var a);

// Per-row categorical cross-entropy -log softmax(logits)[label], evaluated
// through log-sum-exp. Returns a length-n vector.
Var cross_entropy_rows(Var logits, std::span<const int> labels);

// KL(N(mu, softplus(rho)^2) || N(0, prior_sigma^2)) summed over entries.
Var kl_gaussian(Var mu, Var rho, double prior_sigma);

// Scalar helpers shared with non-tape code.
double stable_sigmoid(double x);
double stable_softplus(double x);

}  // namespace bvc
