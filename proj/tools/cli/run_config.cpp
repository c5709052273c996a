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

#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "bvc/errors.hpp"
#include "bvc/objective.hpp"

namespace bvc::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw UsageError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(to_u64(key, value));
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean (true or false)");
}

std::string show(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

struct Entry {
  KeyDoc doc;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BVC_DOUBLE(KEY, FIELD, DESC)                                                      \
  Entry {                                                                                 \
    {KEY, DESC}, [](RunConfig& c, const std::string& k, const std::string& v) {           \
      c.FIELD = to_double(k, v);                                                          \
    },                                                                                    \
        [](const RunConfig& c) { return show(c.FIELD); }                                  \
  }
#define BVC_SIZE(KEY, FIELD, DESC)                                                        \
  Entry {                                                                                 \
    {KEY, DESC}, [](RunConfig& c, const std::string& k, const std::string& v) {           \
      c.FIELD = to_size(k, v);                                                            \
    },                                                                                    \
        [](const RunConfig& c) { return show(static_cast<std::uint64_t>(c.FIELD)); }      \
  }
#define BVC_STRING(KEY, FIELD, DESC)                                                              \
  Entry {                                                                                         \
    {KEY, DESC}, [](RunConfig& c, const std::string&, const std::string& v) { c.FIELD = v; },     \
        [](const RunConfig& c) { return c.FIELD; }                                                \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      BVC_SIZE("sim.depth", sim.depth, "reads per pileup (rows d)"),
      BVC_SIZE("sim.width", sim.width, "loci per sample half (w)"),
      BVC_DOUBLE("sim.error_rate", sim.error_rate, "per-cell sequencing error probability"),
      BVC_DOUBLE("sim.germline_het_rate", sim.germline_het_rate, "per-locus germline het probability"),
      BVC_DOUBLE("sim.vaf_lo", sim.vaf_lo, "lower bound of the somatic VAF"),
      BVC_DOUBLE("sim.vaf_hi", sim.vaf_hi, "upper bound of the somatic VAF"),
      BVC_DOUBLE("sim.positive_fraction", sim.positive_fraction, "share of positives before balancing"),
      BVC_DOUBLE("sim.coverage", sim.coverage, "mean reads per half, at most sim.depth"),
      Entry{{"sim.seed", "simulation seed"},
            [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.seed = to_u64(k, v); },
            [](const RunConfig& c) { return show(c.sim.seed); }},
      BVC_SIZE("sim.count", count, "examples written by simulate"),
      Entry{{"sim.balance", "undersample the majority class to equal counts"},
            [](RunConfig& c, const std::string& k, const std::string& v) { c.balance = to_bool(k, v); },
            [](const RunConfig& c) { return show(c.balance); }},

      Entry{{"model.head", "standard or bayes"},
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.model.head = parse_head(v);
              } catch (const Error&) {
                bad_value(k, v, "a head kind (standard or bayes)");
              }
            },
            [](const RunConfig& c) { return std::string(head_name(c.model.head)); }},
      BVC_SIZE("model.hidden1", model.hidden1, "units per direction, first BiLSTM"),
      BVC_SIZE("model.hidden2", model.hidden2, "units per direction, second BiLSTM"),
      BVC_SIZE("model.dense_units", model.dense_units, "units of the tanh dense layer"),

      BVC_SIZE("train.epochs", train.epochs, "passes over the training split"),
      BVC_SIZE("train.batch_size", train.batch_size, "examples per minibatch"),
      Entry{{"train.seed", "seed of the split, initialisation, shuffling and evaluation streams"},
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_u64(k, v); },
            [](const RunConfig& c) { return show(c.train.seed); }},
      BVC_DOUBLE("train.train_fraction", train.train_fraction, "share of the dataset used for training"),
      BVC_DOUBLE("train.prior_sigma", train.prior.sigma, "scale of the zero-mean Gaussian prior"),
      Entry{{"train.kl_scaling", "KL weight per minibatch: example (1/N) or batch (1/M)"},
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.train.kl_scaling = parse_kl_scaling(v);
              } catch (const Error&) {
                bad_value(k, v, "a KL scaling (example or batch)");
              }
            },
            [](const RunConfig& c) { return std::string(kl_scaling_name(c.train.kl_scaling)); }},
      BVC_DOUBLE("train.learning_rate", train.adam.learning_rate, "Adam step size"),
      BVC_DOUBLE("train.beta1", train.adam.beta1, "Adam first-moment decay"),
      BVC_DOUBLE("train.beta2", train.adam.beta2, "Adam second-moment decay"),
      BVC_DOUBLE("train.epsilon", train.adam.epsilon, "Adam denominator offset"),

      BVC_SIZE("eval.n_mc", n_mc, "Monte-Carlo weight draws per prediction"),
      BVC_DOUBLE("eval.tau", tau, "max-class probability at or below which a call is uncertain"),
      BVC_SIZE("eval.batch_size", eval_batch_size, "inputs per prediction batch"),
      Entry{{"eval.mask_rows", "rows zeroed by mask-eval, LO..HI (1-based, inclusive)"},
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.mask_rows = parse_row_range(v);
              } catch (const Error&) {
                bad_value(k, v, "a row range LO..HI");
              }
            },
            [](const RunConfig& c) { return format_row_range(c.mask_rows); }},

      BVC_STRING("paths.dataset", dataset_path, "dataset file (BVCD)"),
      BVC_STRING("paths.checkpoint", checkpoint_path, "model checkpoint (BVC1)"),
      BVC_STRING("paths.report_dir", report_dir, "directory for reports"),
  };
  return table;
}

#undef BVC_DOUBLE
#undef BVC_SIZE
#undef BVC_STRING

}  // namespace

const std::vector<KeyDoc>& config_keys() {
  static const std::vector<KeyDoc> docs = [] {
    std::vector<KeyDoc> out;
    for (const auto& e : entries()) out.push_back(e.doc);
    return out;
  }();
  return docs;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (e.doc.key == key) {
      e.set(*this, key, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  apply_text(text.str(), path.string());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : entries()) out += e.doc.key + " = " + e.get(*this) + "\n";
  return out;
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.n_mc = n_mc;
  o.tau = tau;
  o.batch_size = eval_batch_size;
  return o;
}

}  // namespace bvc::cli
