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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvc/model.hpp"
#include "bvc/pileup.hpp"
#include "bvc/random.hpp"

namespace bvc {

using ClassProbs = std::array<double, kNumClasses>;

// Monte-Carlo posterior predictive for one input: the arithmetic mean of the
// per-draw softmax outputs.
struct PredictiveDistribution {
  ClassProbs probs{};
  std::vector<ClassProbs> draws;
  std::size_t n_mc = 0;

  static PredictiveDistribution from_draws(std::vector<ClassProbs> draws);

  int predicted_class() const { return probs[1] > probs[0] ? 1 : 0; }
  double max_prob() const { return probs[0] > probs[1] ? probs[0] : probs[1]; }
  // -sum p log p in nats.
  double entropy() const;
};

// Softmax averaged over n_mc weight draws from the posterior (one full draw
// of the variational layers per sample). A deterministic head ignores n_mc
// and returns a single draw.
PredictiveDistribution mc_predict(const Model& model, const Tensor& x, std::size_t n_mc, Rng& rng);

// Batched form; inputs share each weight draw. Result i belongs to input i.
std::vector<PredictiveDistribution> mc_predict_batch(const Model& model,
                                                     std::span<const Tensor> inputs,
                                                     std::size_t n_mc, Rng& rng);

// Uniform bins on [0, 1]; the last bin is closed.
class Histogram {
 public:
  explicit Histogram(std::size_t bins = 20);
  Histogram(std::vector<double> edges, std::vector<std::size_t> counts);

  void add(double value);

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  std::size_t total() const noexcept { return total_; }
  std::size_t bins() const noexcept { return counts_.size(); }

  // Share of the total in bins lying entirely inside [lo, hi].
  double mass(double lo, double hi) const;

  // "bin_lo,bin_hi,count" header plus one row per bin.
  std::string to_csv() const;
  static Histogram from_csv(const std::string& text);

  bool operator==(const Histogram&) const = default;

 private:
  std::vector<double> edges_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double uncertain_fraction = 0.0;  // share with max-class probability <= tau
  Histogram histogram;              // of p(y = 1)
  std::size_t n_mc = 0;
  double tau = 0.0;
  std::size_t count = 0;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

// Accuracy, entropy and histogram over stored predictions.
EvalReport summarize(std::span<const PredictiveDistribution> predictions, std::span<const int> labels,
                     std::size_t n_mc, double tau, std::size_t bins = 20);

struct EvalOptions {
  std::size_t n_mc = 50;
  double tau = 0.6;
  std::size_t batch_size = 64;
  std::optional<RowRange> mask;  // applied to every encoded input
};

// Predicts every example (masking first when requested) and summarises.
// The deterministic head is evaluated with n_mc = 1.
EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& options, Rng& rng,
                    std::vector<PredictiveDistribution>* predictions = nullptr);

inline constexpr double kMidLo = 0.4;
inline constexpr double kMidHi = 0.6;

// In-distribution vs. masked comparison; deltas are masked minus in-dist.
struct OodSummary {
  double entropy_delta = 0.0;
  double uncertain_fraction_delta = 0.0;
  double accuracy_delta = 0.0;
  double mid_mass_in = 0.0;
  double mid_mass_masked = 0.0;

  std::string to_json() const;
};

OodSummary ood_report(const EvalReport& in_distribution, const EvalReport& masked);

}  // namespace bvc
