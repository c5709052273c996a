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

#include "bvc/inference.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bvc/errors.hpp"
#include "bvc/ops.hpp"

namespace bvc {
namespace {

constexpr double kEdgeTolerance = 1e-12;

std::vector<ClassProbs> rows_of(const Tensor& probs) {
  std::vector<ClassProbs> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) out[r] = {probs.at(r, 0), probs.at(r, 1)};
  return out;
}

std::string format_double(double v) {
  // Shortest round-trip representation, locale independent.
  return nlohmann::json(v).dump();
}

}  // namespace

PredictiveDistribution PredictiveDistribution::from_draws(std::vector<ClassProbs> draws) {
  if (draws.empty()) throw DomainError("predictive distribution: no draws");
  PredictiveDistribution out;
  out.n_mc = draws.size();
  ClassProbs total{};
  for (const auto& d : draws) {
    for (std::size_t k = 0; k < kNumClasses; ++k) total[k] += d[k];
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out.probs[k] = total[k] / static_cast<double>(out.n_mc);
  }
  out.draws = std::move(draws);
  return out;
}

double PredictiveDistribution::entropy() const {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<PredictiveDistribution> mc_predict_batch(const Model& model,
                                                     std::span<const Tensor> inputs,
                                                     std::size_t n_mc, Rng& rng) {
  if (n_mc == 0) throw DomainError("mc_predict: n-mc must be at least 1");
  if (inputs.empty()) return {};
  const std::size_t draws = model.variational() ? n_mc : 1;

  Tape tape;
  const ParamVars vars = model.bind_constants(tape);
  Var input = tape.constant(stack_sequences(inputs));
  // The BiLSTM trunk is deterministic, so it is evaluated once per batch and
  // only the variational head is resampled.
  Var features = trunk_forward(model.spec(), vars, input, inputs.size());

  std::vector<std::vector<ClassProbs>> per_input(inputs.size());
  for (std::size_t k = 0; k < draws; ++k) {
    ForwardOptions options;
    if (model.variational()) {
      options.mode = WeightMode::sampled;
      options.perturbation = Perturbation::shared;
      options.rng = &rng;
    }
    const auto probs = rows_of(softmax_rows(head_forward(model.spec(), vars, features, options)).value());
    for (std::size_t i = 0; i < inputs.size(); ++i) per_input[i].push_back(probs[i]);
  }

  std::vector<PredictiveDistribution> out;
  out.reserve(inputs.size());
  for (auto& d : per_input) out.push_back(PredictiveDistribution::from_draws(std::move(d)));
  return out;
}

PredictiveDistribution mc_predict(const Model& model, const Tensor& x, std::size_t n_mc, Rng& rng) {
  return std::move(mc_predict_batch(model, std::span<const Tensor>(&x, 1), n_mc, rng).front());
}

Histogram::Histogram(std::size_t bins) : edges_(bins + 1), counts_(bins, 0) {
  if (bins == 0) throw DomainError("histogram: needs at least one bin");
  for (std::size_t i = 0; i <= bins; ++i) edges_[i] = static_cast<double>(i) / static_cast<double>(bins);
}

Histogram::Histogram(std::vector<double> edges, std::vector<std::size_t> counts)
    : edges_(std::move(edges)), counts_(std::move(counts)) {
  if (edges_.size() != counts_.size() + 1 || counts_.empty()) {
    throw DimensionError("histogram: needs one more edge than bins");
  }
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) throw DomainError("histogram: edges must increase strictly");
  }
  for (std::size_t c : counts_) total_ += c;
}

void Histogram::add(double value) {
  if (!(value >= edges_.front() && value <= edges_.back())) {
    throw DomainError("histogram: value " + std::to_string(value) + " outside the bin range");
  }
  auto it = std::upper_bound(edges_.begin(), edges_.end(), value);
  std::size_t bin = static_cast<std::size_t>(it - edges_.begin());
  bin = bin == 0 ? 0 : std::min(bin - 1, counts_.size() - 1);
  ++counts_[bin];
  ++total_;
}

double Histogram::mass(double lo, double hi) const {
  if (total_ == 0) return 0.0;
  std::size_t inside = 0;
  for (std::size_t b = 0; b < counts_.size(); ++b) {
    if (edges_[b] >= lo - kEdgeTolerance && edges_[b + 1] <= hi + kEdgeTolerance) inside += counts_[b];
  }
  return static_cast<double>(inside) / static_cast<double>(total_);
}

std::string Histogram::to_csv() const {
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < counts_.size(); ++b) {
    out += format_double(edges_[b]) + "," + format_double(edges_[b + 1]) + "," +
           std::to_string(counts_[b]) + "\n";
  }
  return out;
}

Histogram Histogram::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "bin_lo,bin_hi,count") {
    throw FormatError("histogram csv: missing header", 0);
  }
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string lo, hi, count;
    if (!std::getline(row, lo, ',') || !std::getline(row, hi, ',') || !std::getline(row, count)) {
      throw FormatError("histogram csv: malformed row '" + line + "'", 0);
    }
    const double l = nlohmann::json::parse(lo).get<double>();
    const double h = nlohmann::json::parse(hi).get<double>();
    if (edges.empty()) edges.push_back(l);
    else if (edges.back() != l) throw FormatError("histogram csv: bins are not contiguous", 0);
    edges.push_back(h);
    counts.push_back(std::stoull(count));
  }
  return Histogram(std::move(edges), std::move(counts));
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = accuracy;
  j["mean_entropy"] = mean_entropy;
  j["uncertain_fraction"] = uncertain_fraction;
  j["n_mc"] = n_mc;
  j["tau"] = tau;
  j["count"] = count;
  j["histogram_edges"] = histogram.edges();
  j["histogram_counts"] = histogram.counts();
  j["mid_bin_mass"] = histogram.mass(kMidLo, kMidHi);
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("eval report: ") + e.what(), e.byte);
  }
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.mean_entropy = j.at("mean_entropy").get<double>();
    r.uncertain_fraction = j.at("uncertain_fraction").get<double>();
    r.n_mc = j.at("n_mc").get<std::size_t>();
    r.tau = j.at("tau").get<double>();
    r.count = j.at("count").get<std::size_t>();
    r.histogram = Histogram(j.at("histogram_edges").get<std::vector<double>>(),
                            j.at("histogram_counts").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what(), 0);
  }
  return r;
}

EvalReport summarize(std::span<const PredictiveDistribution> predictions, std::span<const int> labels,
                     std::size_t n_mc, double tau, std::size_t bins) {
  if (predictions.empty()) throw DomainError("evaluate: empty dataset");
  if (predictions.size() != labels.size()) {
    throw DimensionError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  EvalReport r;
  r.histogram = Histogram(bins);
  r.n_mc = n_mc;
  r.tau = tau;
  r.count = predictions.size();
  std::size_t correct = 0;
  std::size_t uncertain = 0;
  double entropy = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    correct += p.predicted_class() == labels[i] ? 1 : 0;
    uncertain += p.max_prob() <= tau ? 1 : 0;
    entropy += p.entropy();
    r.histogram.add(std::clamp(p.probs[1], 0.0, 1.0));
  }
  const double n = static_cast<double>(predictions.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.uncertain_fraction = static_cast<double>(uncertain) / n;
  r.mean_entropy = entropy / n;
  return r;
}

EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& options, Rng& rng,
                    std::vector<PredictiveDistribution>* predictions) {
  if (ds.examples.empty()) throw DomainError("evaluate: empty dataset");
  if (options.n_mc == 0) throw DomainError("evaluate: n-mc must be at least 1");
  if (options.batch_size == 0) throw DomainError("evaluate: batch size must be positive");
  const std::size_t n_mc = model.variational() ? options.n_mc : 1;

  std::vector<PredictiveDistribution> all;
  std::vector<int> labels;
  all.reserve(ds.examples.size());
  labels.reserve(ds.examples.size());
  const std::uint64_t base = rng.next_u64();
  std::vector<Tensor> inputs;
  for (std::size_t start = 0, batch = 0; start < ds.examples.size(); start += options.batch_size, ++batch) {
    const std::size_t end = std::min(ds.examples.size(), start + options.batch_size);
    inputs.clear();
    for (std::size_t i = start; i < end; ++i) {
      Tensor x = encode(ds.examples[i].matrix);
      if (options.mask) x = apply_mask(x, *options.mask);
      inputs.push_back(std::move(x));
      labels.push_back(ds.examples[i].label);
    }
    Rng batch_rng = Rng::substream(base, batch);
    auto preds = mc_predict_batch(model, inputs, n_mc, batch_rng);
    std::move(preds.begin(), preds.end(), std::back_inserter(all));
  }
  EvalReport report = summarize(all, labels, n_mc, options.tau);
  if (predictions) *predictions = std::move(all);
  return report;
}

std::string OodSummary::to_json() const {
  nlohmann::json j;
  j["entropy_delta"] = entropy_delta;
  j["uncertain_fraction_delta"] = uncertain_fraction_delta;
  j["accuracy_delta"] = accuracy_delta;
  j["mid_mass_in"] = mid_mass_in;
  j["mid_mass_masked"] = mid_mass_masked;
  return j.dump(2) + "\n";
}

OodSummary ood_report(const EvalReport& in_distribution, const EvalReport& masked) {
  if (in_distribution.n_mc != masked.n_mc || in_distribution.tau != masked.tau) {
    throw ContractError("ood_report: reports were computed with different n-mc or tau");
  }
  OodSummary s;
  s.entropy_delta = masked.mean_entropy - in_distribution.mean_entropy;
  s.uncertain_fraction_delta = masked.uncertain_fraction - in_distribution.uncertain_fraction;
  s.accuracy_delta = masked.accuracy - in_distribution.accuracy;
  s.mid_mass_in = in_distribution.histogram.mass(kMidLo, kMidHi);
  s.mid_mass_masked = masked.histogram.mass(kMidLo, kMidHi);
  return s;
}

}  // namespace bvc
