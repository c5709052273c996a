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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bvc/errors.hpp"
#include "bvc/model.hpp"
#include "bvc/objective.hpp"
#include "bvc/ops.hpp"
#include "bvc/variational.hpp"
#include "test_util.hpp"

namespace bvc {
namespace {

TEST(Softplus, KnownValues) {
  EXPECT_NEAR(softplus_sigma(0.0), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(softplus_sigma(40.0), 40.0, 1e-12);
  const double tiny = softplus_sigma(-40.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_NEAR(tiny / std::exp(-40.0), 1.0, 1e-12);
  EXPECT_NEAR(softplus_sigma(inverse_softplus(0.05)), 0.05, 1e-15);
}

TEST(KlGaussian, ClosedFormExamples) {
  const double rho_one = inverse_softplus(1.0);
  GaussianVariationalParams same{Tensor::filled({3, 2}, 0.0), Tensor::filled({3, 2}, rho_one)};
  EXPECT_NEAR(kl_gaussian_diag(same, {1.0}), 0.0, 1e-15);
  GaussianVariationalParams one{Tensor::vector({1.0}), Tensor::vector({rho_one})};
  EXPECT_NEAR(kl_gaussian_diag(one, {1.0}), 0.5, 1e-15);
  EXPECT_THROW(kl_gaussian_diag(one, {0.0}), DomainError);
  EXPECT_THROW(kl_gaussian_diag(one, {-1.0}), DomainError);
}

TEST(KlGaussian, NonNegativeAndZeroOnlyAtPrior) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    GaussianVariationalParams q{test::random_tensor({5}, rng, -2.0, 2.0), test::random_tensor({5}, rng, -5.0, 3.0)};
    EXPECT_GT(kl_gaussian_diag(q, {0.3 + rng.uniform()}), 0.0);
  }
}

TEST(KlGaussian, TapeValueMatchesClosedForm) {
  Rng rng(6);
  GaussianVariationalParams q{test::random_tensor({4, 3}, rng), test::random_tensor({4, 3}, rng, -4.0, 0.0)};
  Tape tape;
  Var kl = kl_gaussian(tape.constant(q.mu), tape.constant(q.rho), 0.8);
  EXPECT_NEAR(kl.value().item(), kl_gaussian_diag(q, {0.8}), 1e-12);
}

TEST(KlGaussian, MatchesMonteCarloEstimate) {
  Rng rng(10);
  GaussianVariationalParams q{test::random_tensor({10}, rng, -1.0, 1.0), test::random_tensor({10}, rng, -2.0, 0.5)};
  const double sp = 0.9;
  const Tensor sigma = q.sigma();
  // (1/N) sum over draws w ~ q of log q(w) - log p(w).
  const std::size_t draws = 1'000'000;
  double acc = 0.0;
  Rng mc(123);
  for (std::size_t s = 0; s < draws; ++s) {
    for (std::size_t i = 0; i < 10; ++i) {
      const double e = mc.normal();
      const double w = q.mu[i] + sigma[i] * e;
      const double log_q = -std::log(sigma[i]) - 0.5 * e * e;
      const double log_p = -std::log(sp) - 0.5 * (w / sp) * (w / sp);
      acc += log_q - log_p;
    }
  }
  const double estimate = acc / static_cast<double>(draws);
  const double exact = kl_gaussian_diag(q, {sp});
  EXPECT_NEAR(estimate / exact, 1.0, 0.01);
}

TEST(Reparam, CollapsedPosteriorReturnsMean) {
  Rng rng(2);
  GaussianVariationalParams q{test::random_tensor({3, 3}, rng), Tensor::filled({3, 3}, -40.0)};
  const Tensor w = sample_weights_reparam(q, rng);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], q.mu[i], 1e-15);
}

TEST(Reparam, EmpiricalMeanWithinFourStandardErrors) {
  GaussianVariationalParams q{Tensor::vector({0.5, -1.0, 2.0}), Tensor::vector({0.0, -1.0, 1.0})};
  const Tensor sigma = q.sigma();
  const std::size_t n = 100'000;
  std::vector<double> mean(3, 0.0);
  Rng rng(77);
  for (std::size_t s = 0; s < n; ++s) {
    const Tensor w = sample_weights_reparam(q, rng);
    for (std::size_t i = 0; i < 3; ++i) mean[i] += w[i] / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT(std::abs(mean[i] - q.mu[i]), 4.0 * sigma[i] / std::sqrt(static_cast<double>(n)));
  }
}

TEST(Reparam, SameSeedSameDraw) {
  GaussianVariationalParams q{Tensor::vector({0.1, 0.2}), Tensor::vector({0.3, -0.4})};
  Rng a(9), b(9);
  EXPECT_TRUE(sample_weights_reparam(q, a) == sample_weights_reparam(q, b));
}

struct LayerTensors {
  Tensor kernel_mu, kernel_rho, bias_mu, bias_rho;

  static LayerTensors random(std::size_t in, std::size_t out, Rng& rng) {
    return {test::random_tensor({in, out}, rng), test::random_tensor({in, out}, rng, -2.0, 0.0),
            test::random_tensor({out}, rng), test::random_tensor({out}, rng, -2.0, 0.0)};
  }
  VariationalDenseVars bind(Tape& tape) const {
    return {tape.constant(kernel_mu), tape.constant(kernel_rho), tape.constant(bias_mu), tape.constant(bias_rho)};
  }
};

TEST(Flipout, SignEnumerationRecoversMeanOutput) {
  Rng rng(12);
  const LayerTensors layer = LayerTensors::random(2, 1, rng);
  const Tensor x = Tensor::matrix(1, 2, {0.7, -1.4});
  FlipoutNoise noise = FlipoutNoise::draw(1, 2, 1, rng);

  double average = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    noise.input_signs = Tensor::matrix(1, 2, {mask & 1 ? 1.0 : -1.0, mask & 2 ? 1.0 : -1.0});
    noise.output_signs = Tensor::matrix(1, 1, {mask & 4 ? 1.0 : -1.0});
    Tape tape;
    average += flipout_forward(tape.constant(x), layer.bind(tape), noise).value()[0] / 8.0;
  }
  const double bias_sample = layer.bias_mu[0] + softplus_sigma(layer.bias_rho[0]) * noise.bias_eps[0];
  const double expected = x[0] * layer.kernel_mu[0] + x[1] * layer.kernel_mu[1] + bias_sample;
  EXPECT_NEAR(average, expected, 1e-15);
}

TEST(Flipout, ZeroSigmaIsTheMeanLayer) {
  Rng rng(13);
  LayerTensors layer = LayerTensors::random(3, 2, rng);
  std::fill(layer.kernel_rho.data().begin(), layer.kernel_rho.data().end(), -800.0);
  std::fill(layer.bias_rho.data().begin(), layer.bias_rho.data().end(), -800.0);
  const Tensor x = test::random_tensor({4, 3}, rng);
  Tape tape;
  const Tensor y = flipout_forward(tape.constant(x), layer.bind(tape), rng).value();
  const Tensor m = mean_forward(tape.constant(x), layer.bind(tape)).value();
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], m[i]);
}

TEST(Flipout, IdenticalRowsGetDifferentPerturbations) {
  Rng rng(14);
  const LayerTensors layer = LayerTensors::random(3, 2, rng);
  Tensor x({64, 3});
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 3; ++c) x.at(r, c) = 0.5 + static_cast<double>(c);
  Tape tape;
  const Tensor y = flipout_forward(tape.constant(x), layer.bind(tape), rng).value();
  std::size_t distinct = 0;
  for (std::size_t r = 1; r < 64; ++r) distinct += (y.at(r, 0) != y.at(0, 0) || y.at(r, 1) != y.at(0, 1)) ? 1 : 0;
  EXPECT_GT(distinct, 50u);  // collision probability per row is 2^-5
}

TEST(Flipout, EmptyBatchIsADomainError) {
  Rng rng(1);
  const LayerTensors layer = LayerTensors::random(2, 2, rng);
  Tape tape;
  EXPECT_THROW(flipout_forward(tape.constant(Tensor({0, 2})), layer.bind(tape), rng), DomainError);
}

// Median over parameters of the per-entry variance of d(loss)/d(mu) across
// resamplings, for a squared-output loss on one variational layer.
double median_mu_gradient_variance(bool flipout) {
  Rng init(15);
  const LayerTensors layer = LayerTensors::random(8, 4, init);
  const Tensor x = test::random_tensor({32, 8}, init);
  const Tensor target = test::random_tensor({32, 4}, init);
  const std::size_t reps = 200;
  std::vector<double> total(32, 0.0), sq(32, 0.0);
  Rng rng(16);
  for (std::size_t r = 0; r < reps; ++r) {
    Tape tape;
    VariationalDenseVars v{tape.parameter("mu", layer.kernel_mu), tape.constant(layer.kernel_rho),
                           tape.constant(layer.bias_mu), tape.constant(layer.bias_rho)};
    Var xv = tape.constant(x);
    Var y = flipout ? flipout_forward(xv, v, rng) : shared_perturbation_forward(xv, v, rng);
    Var diff = add(y, tape.constant(target));
    const Tensor g = tape.backward(mean(multiply(diff, diff))).at("mu");
    for (std::size_t i = 0; i < g.size(); ++i) {
      total[i] += g[i];
      sq[i] += g[i] * g[i];
    }
  }
  std::vector<double> var(32);
  for (std::size_t i = 0; i < 32; ++i) {
    const double m = total[i] / reps;
    var[i] = (sq[i] - reps * m * m) / (reps - 1);
  }
  std::nth_element(var.begin(), var.begin() + 16, var.end());
  return var[16];
}

TEST(Flipout, GradientVarianceNotAboveSharedPerturbation) {
  EXPECT_LE(median_mu_gradient_variance(true), median_mu_gradient_variance(false));
}

// Model whose variational head sits at the prior and whose deterministic
// parameters are all zero.
Model coin_flip_model(const ModelSpec& spec, double prior_sigma) {
  Rng rng(1);
  Model m = Model::initialize(spec, rng);
  for (auto& [name, t] : m.params()) {
    const bool is_rho = name.size() > 4 && name.ends_with(".rho");
    std::fill(t.data().begin(), t.data().end(), is_rho ? inverse_softplus(prior_sigma) : 0.0);
  }
  return m;
}

ModelSpec toy_spec(HeadKind head) {
  ModelSpec s;
  s.depth = 4;
  s.width = 3;
  s.hidden1 = 3;
  s.hidden2 = 2;
  s.dense_units = 3;
  s.head = head;
  return s;
}

TEST(Elbo, CoinFlipClassifier) {
  const ModelSpec spec = toy_spec(HeadKind::variational_flipout);
  const Model model = coin_flip_model(spec, 1.0);
  Rng data(3);
  const std::vector<Tensor> xs = {test::random_tensor({4, spec.features()}, data, 0.0, 1.0),
                                  test::random_tensor({4, spec.features()}, data, 0.0, 1.0)};
  const std::vector<int> labels = {0, 1};

  Tape tape;
  const ParamVars vars = model.bind(tape);
  const Objective mean_mode = elbo_minibatch(spec, vars, tape.constant(stack_sequences(xs)), labels,
                                             std::size_t{5}, GaussianPrior{1.0}, ForwardOptions{});
  EXPECT_NEAR(mean_mode.report.kl, 0.0, 1e-12);
  EXPECT_NEAR(mean_mode.report.nll, std::numbers::ln2, 1e-15);
  EXPECT_EQ(mean_mode.report.kl_weight, 0.2);

  // Sampled weights give zero-mean logit noise; the expected cross-entropy
  // can only rise above ln 2 (convexity).
  Rng rng(4);
  double nll = 0.0;
  for (int s = 0; s < 200; ++s) {
    Tape t;
    ForwardOptions opts{WeightMode::sampled, Perturbation::flipout, &rng};
    nll += elbo_minibatch(spec, model.bind(t), t.constant(stack_sequences(xs)), labels, std::size_t{5},
                          GaussianPrior{1.0}, opts).report.nll / 200.0;
  }
  EXPECT_GT(nll, std::numbers::ln2);
}

TEST(Elbo, TotalDecomposesExactly) {
  const ModelSpec spec = toy_spec(HeadKind::variational_flipout);
  Rng rng(8);
  const Model model = Model::initialize(spec, rng);
  const std::vector<Tensor> xs = {test::random_tensor({4, spec.features()}, rng, 0.0, 1.0)};
  const std::vector<int> labels = {1};
  Tape tape;
  ForwardOptions opts{WeightMode::sampled, Perturbation::flipout, &rng};
  const LossReport r = elbo_minibatch(spec, model.bind(tape), tape.constant(stack_sequences(xs)), labels,
                                      kl_weight(KlScaling::per_example, 3, 150), GaussianPrior{0.5}, opts).report;
  EXPECT_GE(r.kl, 0.0);
  EXPECT_EQ(r.kl_weight, 1.0 / 150.0);
  EXPECT_EQ(r.total, r.nll + r.kl_weight * r.kl);
}

TEST(Elbo, EpochWeightsCountTheKlOnce) {
  const double kl = 1234.5678;
  const std::size_t m = 7;
  double per_batch = 0.0;
  for (std::size_t k = 0; k < m; ++k) per_batch += kl_weight(KlScaling::per_batch, m, 0) * kl;
  EXPECT_NEAR(per_batch, kl, 1e-9);

  // Per-example weighting: batch sizes 64, 64, 22 of N = 150.
  double per_example = 0.0;
  for (std::size_t b : {64, 64, 22}) per_example += static_cast<double>(b) * kl_weight(KlScaling::per_example, 3, 150) * kl;
  EXPECT_NEAR(per_example, kl, 1e-9);
}

TEST(Elbo, Errors) {
  const ModelSpec spec = toy_spec(HeadKind::variational_flipout);
  Rng rng(9);
  const Model model = Model::initialize(spec, rng);
  Tape tape;
  const ParamVars vars = model.bind(tape);
  Var empty = tape.constant(Tensor({0, spec.features()}));
  EXPECT_THROW(elbo_minibatch(spec, vars, empty, {}, std::size_t{1}, GaussianPrior{}, ForwardOptions{}), DomainError);
  EXPECT_THROW(kl_weight(KlScaling::per_batch, 0, 10), DomainError);
  EXPECT_THROW(parse_kl_scaling("epoch"), UsageError);
}

TEST(Elbo, GradientsPassFiniteDifferences) {
  const ModelSpec spec = toy_spec(HeadKind::variational_flipout);
  Rng rng(17);
  const Model model = Model::initialize(spec, rng);
  const std::vector<Tensor> xs = {test::random_tensor({4, spec.features()}, rng, 0.0, 1.0),
                                  test::random_tensor({4, spec.features()}, rng, 0.0, 1.0)};
  const std::vector<int> labels = {0, 1};
  const Tensor input = stack_sequences(xs);
  const auto f = [&](Tape& tape, const ParamVars& vars) {
    Rng frozen(99);  // same draws on every evaluation
    ForwardOptions opts{WeightMode::sampled, Perturbation::flipout, &frozen};
    return elbo_minibatch(spec, vars, tape.constant(input), labels, 0.1, GaussianPrior{1.0}, opts).total;
  };
  const GradCheckResult r = grad_check(f, model.params(), 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter << "[" << r.worst_index << "]";
}

}  // namespace
}  // namespace bvc
