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

#include "bvc/trainer.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bvc/errors.hpp"
#include "bvc/objective.hpp"

namespace bvc {
namespace {

std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,nll,kl,total,train_accuracy\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + num(e.nll) + "," + num(e.kl) + "," + num(e.total) + "," +
           num(e.train_accuracy) + "\n";
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, const TrainConfig& config) {
  Rng rng = Rng::substream(config.seed, streams::split);
  return split(ds, config.train_fraction, rng);
}

TrainResult train_model(const Dataset& train, const ModelSpec& spec, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
  if (train.examples.empty()) throw DomainError("train: empty training set");
  if (config.batch_size == 0) throw DomainError("train: batch size must be positive");
  if (train.depth != spec.depth || train.width != spec.width) {
    throw DimensionError("train: dataset is " + std::to_string(train.depth) + "x" +
                         std::to_string(train.width) + " but the model expects " +
                         std::to_string(spec.depth) + "x" + std::to_string(spec.width));
  }

  Rng init = Rng::substream(config.seed, streams::init);
  TrainResult result{Model::initialize(spec, init), {}};
  AdamState adam{config.adam, {}, {}, 0};

  const std::size_t n = train.examples.size();
  const std::size_t num_batches = (n + config.batch_size - 1) / config.batch_size;
  const double weight = kl_weight(config.kl_scaling, num_batches, n);
  std::vector<std::size_t> order(n);
  std::vector<Tensor> inputs;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = Rng::substream(config.seed, streams::epoch + epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);

    EpochLog log;
    log.epoch = epoch + 1;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t start = b * config.batch_size;
      const std::size_t end = std::min(n, start + config.batch_size);
      inputs.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train.examples[order[k]];
        inputs.push_back(encode(ex.matrix));
        labels.push_back(ex.label);
      }

      Tape tape;
      const ParamVars vars = result.model.bind(tape);
      Var input = tape.constant(stack_sequences(inputs));
      ForwardOptions options;
      if (result.model.variational()) {
        options.mode = WeightMode::sampled;
        options.perturbation = Perturbation::flipout;
        options.rng = &rng;
      }
      const Objective obj = elbo_minibatch(spec, vars, input, labels, weight, config.prior, options);
      if (!std::isfinite(obj.report.total)) {
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                            ", batch " + std::to_string(b + 1));
      }
      const Tensor& logits = obj.logits.value();
      for (std::size_t r = 0; r < labels.size(); ++r) {
        const int predicted = logits.at(r, 1) > logits.at(r, 0) ? 1 : 0;
        correct += predicted == labels[r] ? 1 : 0;
      }
      log.nll += obj.report.nll;
      log.kl += obj.report.kl;
      log.total += obj.report.total;

      const GradMap grads = tape.backward(obj.total);
      try {
        auto [params, state] = adam_step(result.model.params(), grads, adam);
        result.model.params() = std::move(params);
        adam = std::move(state);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) +
                            ", batch " + std::to_string(b + 1));
      }
    }
    const double batches = static_cast<double>(num_batches);
    log.nll /= batches;
    log.kl /= batches;
    log.total /= batches;
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace bvc
