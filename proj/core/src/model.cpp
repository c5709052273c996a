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

#include "bvc/model.hpp"

#include <cmath>
#include <cstring>

#include "bvc/errors.hpp"
#include "bvc/ops.hpp"

namespace bvc {
namespace {

constexpr double kInitialSigma = 0.05;
constexpr double kForgetBias = 1.0;

const Var& lookup(const ParamVars& vars, const std::string& name) {
  auto it = vars.find(name);
  if (it == vars.end()) throw ContractError("model: missing parameter '" + name + "'");
  return it->second;
}

DenseVars dense_vars(const ParamVars& vars, const std::string& prefix) {
  return {lookup(vars, prefix + ".kernel"), lookup(vars, prefix + ".bias")};
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = bound * (2.0 * rng.uniform() - 1.0);
  return t;
}

}  // namespace

const char* head_name(HeadKind head) {
  return head == HeadKind::deterministic ? "standard" : "bayes";
}

HeadKind parse_head(const std::string& name) {
  if (name == "standard" || name == "deterministic") return HeadKind::deterministic;
  if (name == "bayes" || name == "variational-flipout") return HeadKind::variational_flipout;
  throw UsageError("unknown head kind '" + name + "' (expected standard or bayes)");
}

void ModelSpec::validate() const {
  if (depth == 0 || width == 0 || hidden1 == 0 || hidden2 == 0 || dense_units == 0) {
    throw DomainError("model spec: every extent must be positive");
  }
}

Model::Model(ModelSpec spec, ParamTensors params) : spec_(spec), params_(std::move(params)) {
  spec_.validate();
  for (const auto& [name, shape] : layout(spec_)) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("model: missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw DimensionError("model: parameter '" + name + "' has shape " +
                           shape_string(it->second.shape()) + ", expected " + shape_string(shape));
    }
  }
  if (params_.size() != layout(spec_).size()) {
    throw ContractError("model: unexpected extra parameters for this spec");
  }
}

std::vector<std::pair<std::string, Shape>> Model::layout(const ModelSpec& spec) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t f = spec.features();
  auto lstm = [&](const std::string& prefix, std::size_t in, std::size_t h) {
    for (const char* dir : {".fwd", ".bwd"}) {
      out.emplace_back(prefix + dir + ".kernel", Shape{in, 4 * h});
      out.emplace_back(prefix + dir + ".recurrent", Shape{h, 4 * h});
      out.emplace_back(prefix + dir + ".bias", Shape{4 * h});
    }
  };
  lstm("lstm1", f, spec.hidden1);
  lstm("lstm2", 2 * spec.hidden1, spec.hidden2);
  auto dense = [&](const std::string& prefix, std::size_t in, std::size_t units) {
    if (spec.head == HeadKind::deterministic) {
      out.emplace_back(prefix + ".kernel", Shape{in, units});
      out.emplace_back(prefix + ".bias", Shape{units});
    } else {
      out.emplace_back(prefix + ".kernel.mu", Shape{in, units});
      out.emplace_back(prefix + ".kernel.rho", Shape{in, units});
      out.emplace_back(prefix + ".bias.mu", Shape{units});
      out.emplace_back(prefix + ".bias.rho", Shape{units});
    }
  };
  dense("dense1", 2 * spec.hidden2, spec.dense_units);
  dense("dense2", spec.dense_units, kNumClasses);
  return out;
}

Model Model::initialize(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  const double rho0 = inverse_softplus(kInitialSigma);
  ParamTensors params;
  for (const auto& [name, shape] : layout(spec)) {
    auto ends_with = [&](const char* suffix) {
      const std::size_t n = std::strlen(suffix);
      return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
    };
    Tensor t(shape);
    if (ends_with(".rho")) {
      t = Tensor::filled(shape, rho0);
    } else if (ends_with("kernel") || ends_with("recurrent") || ends_with("kernel.mu")) {
      t = uniform_tensor(shape, 1.0 / std::sqrt(static_cast<double>(shape[0])), rng);
    } else if (name.starts_with("lstm")) {
      const std::size_t h = shape[0] / 4;
      for (std::size_t j = h; j < 2 * h; ++j) t[j] = kForgetBias;
    }
    params.emplace(name, std::move(t));
  }
  return Model(spec, std::move(params));
}

ParamVars Model::bind(Tape& tape) const {
  ParamVars vars;
  for (const auto& [name, value] : params_) vars.emplace(name, tape.parameter(name, value));
  return vars;
}

ParamVars Model::bind_constants(Tape& tape) const {
  ParamVars vars;
  for (const auto& [name, value] : params_) vars.emplace(name, tape.constant(value));
  return vars;
}

GaussianVariationalParams Model::posterior(const std::string& layer) const {
  auto mu = params_.find(layer + ".mu");
  auto rho = params_.find(layer + ".rho");
  if (mu == params_.end() || rho == params_.end()) {
    throw ContractError("model: '" + layer + "' is not a variational layer");
  }
  return {mu->second, rho->second};
}

std::vector<std::string> Model::variational_layers() const {
  if (!variational()) return {};
  return {"dense1.bias", "dense1.kernel", "dense2.bias", "dense2.kernel"};
}

Tensor stack_sequences(std::span<const Tensor> sequences) {
  if (sequences.empty()) throw DomainError("stack_sequences: empty batch");
  const Shape& first = sequences[0].shape();
  if (first.size() != 2) throw DimensionError("stack_sequences: sequences must be [d x f]");
  const std::size_t d = first[0];
  const std::size_t f = first[1];
  const std::size_t n = sequences.size();
  Tensor out({d * n, f});
  for (std::size_t b = 0; b < n; ++b) {
    if (sequences[b].shape() != first) {
      throw DimensionError("stack_sequences: sequence " + std::to_string(b) + " has shape " +
                           shape_string(sequences[b].shape()) + ", expected " +
                           shape_string(first));
    }
    const double* src = sequences[b].data().data();
    for (std::size_t t = 0; t < d; ++t) {
      std::memcpy(out.data().data() + (t * n + b) * f, src + t * f, f * sizeof(double));
    }
  }
  return out;
}

LstmVars lstm_vars(const ParamVars& vars, const std::string& prefix) {
  return {lookup(vars, prefix + ".kernel"), lookup(vars, prefix + ".recurrent"),
          lookup(vars, prefix + ".bias")};
}

VariationalDenseVars variational_dense_vars(const ParamVars& vars, const std::string& prefix) {
  return {lookup(vars, prefix + ".kernel.mu"), lookup(vars, prefix + ".kernel.rho"),
          lookup(vars, prefix + ".bias.mu"), lookup(vars, prefix + ".bias.rho")};
}

Var trunk_forward(const ModelSpec& spec, const ParamVars& vars, Var input, std::size_t batch) {
  const Shape& s = input.shape();
  if (s.size() != 2 || s[1] != spec.features()) {
    throw DimensionError("model: input " + shape_string(s) + " does not have " +
                         std::to_string(spec.features()) + " features per step");
  }
  if (batch == 0 || s[0] != spec.depth * batch) {
    throw DimensionError("model: input " + shape_string(s) + " is not " +
                         std::to_string(spec.depth) + " steps of batch " + std::to_string(batch));
  }
  Var seq = bilstm_forward(input, batch, lstm_vars(vars, "lstm1.fwd"), lstm_vars(vars, "lstm1.bwd"));
  return bilstm_last_step(seq, batch, lstm_vars(vars, "lstm2.fwd"), lstm_vars(vars, "lstm2.bwd"));
}

Var head_forward(const ModelSpec& spec, const ParamVars& vars, Var features,
                 const ForwardOptions& options) {
  if (spec.head == HeadKind::deterministic) {
    if (options.mode == WeightMode::sampled) {
      throw ContractError("model: sampled weights requested from a deterministic head");
    }
    Var hidden = tanh(dense_forward(features, dense_vars(vars, "dense1")));
    return dense_forward(hidden, dense_vars(vars, "dense2"));
  }

  const VariationalDenseVars d1 = variational_dense_vars(vars, "dense1");
  const VariationalDenseVars d2 = variational_dense_vars(vars, "dense2");
  if (options.mode == WeightMode::mean) {
    return mean_forward(tanh(mean_forward(features, d1)), d2);
  }
  if (options.rng == nullptr) throw ContractError("model: sampled mode needs a random stream");
  Rng& rng = *options.rng;
  if (options.perturbation == Perturbation::flipout) {
    return flipout_forward(tanh(flipout_forward(features, d1, rng)), d2, rng);
  }
  return shared_perturbation_forward(tanh(shared_perturbation_forward(features, d1, rng)), d2, rng);
}

Var model_forward(const ModelSpec& spec, const ParamVars& vars, Var input, std::size_t batch,
                  const ForwardOptions& options) {
  if (spec.head == HeadKind::deterministic && options.mode == WeightMode::sampled) {
    throw ContractError("model: sampled weights requested from a deterministic head");
  }
  return head_forward(spec, vars, trunk_forward(spec, vars, input, batch), options);
}

Tensor model_forward(const Model& model, const Tensor& x, const ForwardOptions& options) {
  Tape tape;
  const ParamVars vars = model.bind_constants(tape);
  Var logits = model_forward(model.spec(), vars, tape.constant(x), 1, options);
  return Tensor::vector(logits.value().values());
}

}  // namespace bvc
