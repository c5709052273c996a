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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bvc/adam.hpp"
#include "bvc/model.hpp"
#include "bvc/objective.hpp"
#include "bvc/pileup.hpp"
#include "bvc/variational.hpp"

namespace bvc {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
  GaussianPrior prior{1.0};
  KlScaling kl_scaling = KlScaling::per_example;
  AdamConfig adam;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double nll = 0.0;       // mean over batches
  double kl = 0.0;        // mean over batches
  double total = 0.0;     // mean over batches
  double train_accuracy = 0.0;
};

std::string epoch_log_csv(const std::vector<EpochLog>& log);

// Named random streams derived from the run seed.
namespace streams {
inline constexpr std::uint64_t init = 0x1000;
inline constexpr std::uint64_t split = 0x2000;
inline constexpr std::uint64_t epoch = 0x3000;  // + epoch index
inline constexpr std::uint64_t eval = 0x4000;
}  // namespace streams

// The train/test partition a run with this config uses.
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, const TrainConfig& config);

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Minibatch Adam on the negative ELBO (cross-entropy for the deterministic
// head). Each epoch reshuffles the training set; the last batch may be short.
// One Flipout weight sample is drawn per forward pass. Raises TrainingError
// naming the epoch and batch if the loss becomes non-finite.
TrainResult train_model(const Dataset& train, const ModelSpec& spec, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

}  // namespace bvc
