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

#include "bvc/variational.hpp"

#include <cmath>

#include "bvc/errors.hpp"
#include "bvc/ops.hpp"

namespace bvc {
namespace {

Tensor normal_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal();
  return t;
}

Tensor sign_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.rademacher();
  return t;
}

void check_layer(Var x, const VariationalDenseVars& layer) {
  const Shape& k = layer.kernel_mu.shape();
  if (k.size() != 2 || layer.kernel_rho.shape() != k) {
    throw DimensionError("variational dense: kernel mu/rho shapes " + shape_string(k) + " and " +
                         shape_string(layer.kernel_rho.shape()) + " disagree");
  }
  if (layer.bias_mu.shape() != Shape{k[1]} || layer.bias_rho.shape() != Shape{k[1]}) {
    throw DimensionError("variational dense: bias must be [" + std::to_string(k[1]) + "]");
  }
  const Shape& xs = x.shape();
  if (xs.size() != 2) throw DimensionError("variational dense: input must be rank 2");
  if (xs[0] == 0) throw DomainError("variational dense: empty batch");
  if (xs[1] != k[0]) {
    throw DimensionError("variational dense: input " + shape_string(xs) +
                         " does not match kernel " + shape_string(k));
  }
}

Var sampled_bias(const VariationalDenseVars& layer, const Tensor& eps) {
  Tape& tape = *layer.bias_mu.tape();
  return add(layer.bias_mu, multiply(softplus(layer.bias_rho), tape.constant(eps)));
}

}  // namespace

Tensor GaussianVariationalParams::sigma() const {
  Tensor s = rho;
  for (double& v : s.data()) v = softplus_sigma(v);
  return s;
}

double softplus_sigma(double rho) { return stable_softplus(rho); }

double inverse_softplus(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("inverse_softplus: sigma must be positive");
  // log(e^s - 1), rearranged to stay finite for large s.
  return sigma + std::log(-std::expm1(-sigma));
}

double kl_gaussian_diag(const GaussianVariationalParams& q, const GaussianPrior& prior) {
  if (!(prior.sigma > 0.0)) throw DomainError("kl_gaussian_diag: prior sigma must be positive");
  if (q.mu.shape() != q.rho.shape()) {
    throw DimensionError("kl_gaussian_diag: mu " + shape_string(q.mu.shape()) + " vs rho " +
                         shape_string(q.rho.shape()));
  }
  const double sp2 = prior.sigma * prior.sigma;
  const double log_sp = std::log(prior.sigma);
  double total = 0.0;
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    const double s = softplus_sigma(q.rho[i]);
    total += log_sp - std::log(s) + (s * s + q.mu[i] * q.mu[i]) / (2.0 * sp2) - 0.5;
  }
  return total;
}

Tensor sample_weights_reparam(const GaussianVariationalParams& q, Rng& rng) {
  if (q.mu.shape() != q.rho.shape()) {
    throw DimensionError("sample_weights_reparam: mu and rho shapes differ");
  }
  Tensor w = q.mu;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += softplus_sigma(q.rho[i]) * rng.normal();
  return w;
}

Var sample_weights_reparam(Var mu, Var rho, Rng& rng) {
  if (mu.shape() != rho.shape()) throw DimensionError("sample_weights_reparam: mu and rho shapes differ");
  Tape& tape = *mu.tape();
  Var eps = tape.constant(normal_tensor(mu.shape(), rng));
  return add(mu, multiply(softplus(rho), eps));
}

FlipoutNoise FlipoutNoise::draw(std::size_t batch, std::size_t in, std::size_t out, Rng& rng) {
  FlipoutNoise noise;
  noise.kernel_eps = normal_tensor({in, out}, rng);
  noise.bias_eps = normal_tensor({out}, rng);
  noise.input_signs = sign_tensor({batch, in}, rng);
  noise.output_signs = sign_tensor({batch, out}, rng);
  return noise;
}

Var flipout_forward(Var x, const VariationalDenseVars& layer, const FlipoutNoise& noise) {
  check_layer(x, layer);
  const std::size_t n = x.shape()[0];
  const Shape& k = layer.kernel_mu.shape();
  if (noise.kernel_eps.shape() != k || noise.bias_eps.shape() != Shape{k[1]} ||
      noise.input_signs.shape() != Shape{n, k[0]} || noise.output_signs.shape() != Shape{n, k[1]}) {
    throw DimensionError("flipout: noise shapes do not match the layer and batch");
  }
  Tape& tape = *x.tape();
  Var mean_out = matmul(x, layer.kernel_mu);
  Var delta = multiply(softplus(layer.kernel_rho), tape.constant(noise.kernel_eps));
  Var signed_in = multiply(x, tape.constant(noise.input_signs));
  Var perturbation = multiply(matmul(signed_in, delta), tape.constant(noise.output_signs));
  return add(add(mean_out, perturbation), sampled_bias(layer, noise.bias_eps));
}

Var flipout_forward(Var x, const VariationalDenseVars& layer, Rng& rng) {
  check_layer(x, layer);
  const Shape& k = layer.kernel_mu.shape();
  return flipout_forward(x, layer, FlipoutNoise::draw(x.shape()[0], k[0], k[1], rng));
}

Var shared_perturbation_forward(Var x, const VariationalDenseVars& layer, Rng& rng) {
  check_layer(x, layer);
  Var w = sample_weights_reparam(layer.kernel_mu, layer.kernel_rho, rng);
  Tensor bias_eps = normal_tensor(layer.bias_mu.shape(), rng);
  return add(matmul(x, w), sampled_bias(layer, bias_eps));
}

Var mean_forward(Var x, const VariationalDenseVars& layer) {
  check_layer(x, layer);
  return add(matmul(x, layer.kernel_mu), layer.bias_mu);
}

}  // namespace bvc
