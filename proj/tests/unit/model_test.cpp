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
#include <set>
#include <vector>

#include "bvc/checkpoint.hpp"
#include "bvc/errors.hpp"
#include "bvc/model.hpp"
#include "bvc/objective.hpp"
#include "test_util.hpp"

namespace bvc {
namespace {

ModelSpec toy(HeadKind head) {
  ModelSpec s;
  s.depth = 4;
  s.width = 3;
  s.hidden1 = 3;
  s.hidden2 = 2;
  s.dense_units = 3;
  s.head = head;
  return s;
}

Tensor toy_input(const ModelSpec& spec, Rng& rng) {
  Tensor x({spec.depth, spec.features()});
  for (double& v : x.data()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  return x;
}

TEST(ModelSpec, FeaturesAreFlattenedColumnsTimesChannels) {
  ModelSpec s;
  EXPECT_EQ(s.features(), 60u);
  EXPECT_THROW([] { ModelSpec bad; bad.hidden1 = 0; bad.validate(); }(), DomainError);
}

TEST(Model, LayoutNamesPerHead) {
  std::set<std::string> standard, bayes;
  for (const auto& [n, s] : Model::layout(toy(HeadKind::deterministic))) standard.insert(n);
  for (const auto& [n, s] : Model::layout(toy(HeadKind::variational_flipout))) bayes.insert(n);
  EXPECT_TRUE(standard.count("lstm1.fwd.kernel"));
  EXPECT_TRUE(standard.count("lstm2.bwd.recurrent"));
  EXPECT_TRUE(standard.count("dense2.kernel"));
  EXPECT_TRUE(bayes.count("dense1.kernel.mu"));
  EXPECT_TRUE(bayes.count("dense2.bias.rho"));
  EXPECT_FALSE(bayes.count("dense2.kernel"));
  EXPECT_EQ(standard.size(), 16u);
  EXPECT_EQ(bayes.size(), 20u);
}

TEST(Model, InitialisationFollowsTheDocumentedRules) {
  const ModelSpec spec = toy(HeadKind::variational_flipout);
  Rng rng(1);
  const Model m = Model::initialize(spec, rng);
  const Tensor& k = m.params().at("lstm1.fwd.kernel");
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.features()));
  for (double v : k.data()) EXPECT_LE(std::abs(v), bound);
  for (double v : m.params().at("dense1.kernel.rho").data()) EXPECT_NEAR(softplus_sigma(v), 0.05, 1e-15);
  for (double v : m.params().at("dense2.bias.mu").data()) EXPECT_EQ(v, 0.0);
  // LSTM biases are zero except the forget block, which starts at 1.
  const Tensor& b = m.params().at("lstm2.bwd.bias");
  const std::size_t h = spec.hidden2;
  for (std::size_t j = 0; j < 4 * h; ++j) EXPECT_EQ(b[j], (j >= h && j < 2 * h) ? 1.0 : 0.0) << j;
}

TEST(Model, RejectsParametersThatDoNotMatchTheSpec) {
  const ModelSpec spec = toy(HeadKind::deterministic);
  Rng rng(1);
  ParamTensors params = Model::initialize(spec, rng).params();
  ParamTensors missing = params;
  missing.erase("dense1.bias");
  EXPECT_THROW(Model(spec, missing), ContractError);
  params["dense1.bias"] = Tensor({7});
  EXPECT_THROW(Model(spec, params), DimensionError);
}

TEST(Model, ZeroInputAndParametersGiveACoinFlip) {
  for (HeadKind head : {HeadKind::deterministic, HeadKind::variational_flipout}) {
    const ModelSpec spec = toy(head);
    Rng rng(2);
    Model m = Model::initialize(spec, rng);
    for (auto& [name, t] : m.params()) std::fill(t.data().begin(), t.data().end(), 0.0);
    const Tensor logits = model_forward(m, Tensor({spec.depth, spec.features()}), ForwardOptions{});
    ASSERT_EQ(logits.shape(), (Shape{2}));
    EXPECT_EQ(logits[0], 0.0);
    EXPECT_EQ(logits[1], 0.0);
  }
}

TEST(Model, SampledModeContracts) {
  Rng rng(3);
  const Model standard = Model::initialize(toy(HeadKind::deterministic), rng);
  const Model bayes = Model::initialize(toy(HeadKind::variational_flipout), rng);
  const Tensor x = toy_input(standard.spec(), rng);
  EXPECT_THROW(model_forward(standard, x, {WeightMode::sampled, Perturbation::flipout, &rng}), ContractError);
  EXPECT_THROW(model_forward(bayes, x, {WeightMode::sampled, Perturbation::flipout, nullptr}), ContractError);
  EXPECT_THROW(model_forward(bayes, Tensor({3, 18}), ForwardOptions{}), DimensionError);
}

TEST(Model, SampledModeIsDeterministicGivenTheStream) {
  Rng rng(4);
  const Model bayes = Model::initialize(toy(HeadKind::variational_flipout), rng);
  const Tensor x = toy_input(bayes.spec(), rng);
  Rng a(17), b(17);
  const Tensor la = model_forward(bayes, x, {WeightMode::sampled, Perturbation::flipout, &a});
  const Tensor lb = model_forward(bayes, x, {WeightMode::sampled, Perturbation::flipout, &b});
  EXPECT_TRUE(la == lb);
  const Tensor lc = model_forward(bayes, x, {WeightMode::sampled, Perturbation::flipout, &a});
  EXPECT_FALSE(la == lc);
}

TEST(Model, BatchedForwardMatchesPerSequenceForward) {
  Rng rng(5);
  const Model m = Model::initialize(toy(HeadKind::deterministic), rng);
  const std::vector<Tensor> xs = {toy_input(m.spec(), rng), toy_input(m.spec(), rng), toy_input(m.spec(), rng)};
  Tape tape;
  const Tensor batched =
      model_forward(m.spec(), m.bind_constants(tape), tape.constant(stack_sequences(xs)), xs.size(), ForwardOptions{})
          .value();
  for (std::size_t b = 0; b < xs.size(); ++b) {
    const Tensor single = model_forward(m, xs[b], ForwardOptions{});
    EXPECT_NEAR(batched.at(b, 0), single[0], 1e-14);
    EXPECT_NEAR(batched.at(b, 1), single[1], 1e-14);
  }
}

class FullModelGradient : public ::testing::TestWithParam<HeadKind> {};

TEST_P(FullModelGradient, LossMatchesFiniteDifferences) {
  const ModelSpec spec = toy(GetParam());
  Rng rng(6);
  const Model m = Model::initialize(spec, rng);
  const std::vector<Tensor> xs = {toy_input(spec, rng), toy_input(spec, rng)};
  const std::vector<int> labels = {1, 0};
  const Tensor input = stack_sequences(xs);
  const bool bayes = GetParam() == HeadKind::variational_flipout;
  const auto f = [&](Tape& tape, const ParamVars& vars) {
    Rng frozen(33);
    ForwardOptions opts;
    if (bayes) opts = {WeightMode::sampled, Perturbation::flipout, &frozen};
    return elbo_minibatch(spec, vars, tape.constant(input), labels, 0.25, GaussianPrior{1.0}, opts).total;
  };
  const GradCheckResult r = grad_check(f, m.params(), 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter << "[" << r.worst_index << "]";
}

INSTANTIATE_TEST_SUITE_P(Heads, FullModelGradient,
                         ::testing::Values(HeadKind::deterministic, HeadKind::variational_flipout),
                         [](const auto& info) { return std::string(head_name(info.param)); });

TEST(Checkpoint, RoundTripIsBitExact) {
  for (HeadKind head : {HeadKind::deterministic, HeadKind::variational_flipout}) {
    Rng rng(7);
    const Model m = Model::initialize(toy(head), rng);
    const auto bytes = serialize_checkpoint(m);
    const Model back = deserialize_checkpoint(bytes);
    EXPECT_EQ(back.spec(), m.spec());
    ASSERT_EQ(back.params().size(), m.params().size());
    for (const auto& [name, t] : m.params()) EXPECT_TRUE(back.params().at(name) == t) << name;
    EXPECT_EQ(serialize_checkpoint(back), bytes);
  }
}

TEST(Checkpoint, FileRoundTripAndCorruption) {
  test::TempDir dir("ckpt");
  Rng rng(8);
  const Model m = Model::initialize(toy(HeadKind::variational_flipout), rng);
  save_checkpoint(m, dir / "m.bvc1");
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "m.bvc1")), serialize_checkpoint(m));

  auto bytes = serialize_checkpoint(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BVC1");
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize_checkpoint(bad_version), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_checkpoint(truncated), FormatError);
  EXPECT_THROW(deserialize_checkpoint({}), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "absent.bvc1"), UsageError);
}

}  // namespace
}  // namespace bvc
