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

#include "bvc/random.hpp"
#include "bvc/tape.hpp"
#include "bvc/tensor.hpp"

namespace bvc {

// Mean-field Gaussian posterior over a tensor of weights; sigma = softplus(rho).
struct GaussianVariationalParams {
  Tensor mu;
  Tensor rho;

  Tensor sigma() const;
};

// Zero-mean isotropic Gaussian prior.
struct GaussianPrior {
  double sigma = 1.0;
};

// log(1 + e^rho), without overflow for large |rho|.
double softplus_sigma(double rho);

// rho such that softplus(rho) == sigma; sigma must be positive.
double inverse_softplus(double sigma);

// Closed-form KL(q || p) summed over all weights:
//   sum log(sp/s) + (s^2 + mu^2) / (2 sp^2) - 1/2
double kl_gaussian_diag(const GaussianVariationalParams& q, const GaussianPrior& prior);

// w = mu + sigma * eps, eps ~ N(0, I), drawn in row-major order.
Tensor sample_weights_reparam(const GaussianVariationalParams& q, Rng& rng);

// Tape version of the reparameterised draw; differentiable in mu and rho.
Var sample_weights_reparam(Var mu, Var rho, Rng& rng);

// A variational dense layer bound to a tape.
struct VariationalDenseVars {
  Var kernel_mu;   // [in x out]
  Var kernel_rho;  // [in x out]
  Var bias_mu;     // [out]
  Var bias_rho;    // [out]
};

// Noise consumed by one Flipout pass. Drawn from the stream in the order
// kernel_eps (row-major), bias_eps, input_signs (row-major),
// output_signs (row-major).
struct FlipoutNoise {
  Tensor kernel_eps;    // [in x out], N(0, 1), shared by the batch
  Tensor bias_eps;      // [out], N(0, 1)
  Tensor input_signs;   // [n x in], +-1
  Tensor output_signs;  // [n x out], +-1

  static FlipoutNoise draw(std::size_t batch, std::size_t in, std::size_t out, Rng& rng);
};

// Y = X mu + ((X o S)(sigma o E)) o R + (b_mu + b_sigma o e_b)
// Row k sees the kernel perturbation (sigma o E) o (s_k r_k^T).
Var flipout_forward(Var x, const VariationalDenseVars& layer, const FlipoutNoise& noise);
Var flipout_forward(Var x, const VariationalDenseVars& layer, Rng& rng);

// One kernel draw shared by every row of the batch: Y = X W + b with
// W = mu + sigma o E, b = b_mu + b_sigma o e_b. Draw order: E, then e_b.
Var shared_perturbation_forward(Var x, const VariationalDenseVars& layer, Rng& rng);

// Posterior-mean pass: Y = X mu + b_mu.
Var mean_forward(Var x, const VariationalDenseVars& layer);

}  // namespace bvc
