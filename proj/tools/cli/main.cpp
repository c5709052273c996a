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

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "bvc/errors.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace {

using bvc::cli::RunConfig;

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "flat key = value config file");
  cmd->add_option("--set", args.overrides, "override one config key, KEY=VALUE (repeatable)");
}

RunConfig resolve(const CommonArgs& args) {
  RunConfig config;
  if (!args.config_file.empty()) config.apply_file(args.config_file);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw bvc::UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

// One line per key: name, default and description. Defaults come from the
// echoed text of a default-constructed config.
std::string describe_keys() {
  std::map<std::string, std::string> defaults;
  std::istringstream text(RunConfig{}.to_text());
  for (std::string line; std::getline(text, line);) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) defaults[line.substr(0, eq)] = line.substr(eq + 3);
  }
  std::string out = "Config keys (default in brackets):\n";
  for (const auto& k : bvc::cli::config_keys()) {
    out += "  " + k.key + " [" + defaults[k.key] + "]  " + k.description + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian somatic variant classifier: simulate, train and evaluate."};
  app.footer(describe_keys());
  app.require_subcommand(1);

  CommonArgs common;
  std::string out, data, model, mask_rows, head;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  bool balance = false;

  auto* simulate = app.add_subcommand("simulate", "write a synthetic tumor/normal pileup dataset");
  add_common(simulate, common);
  simulate->add_option("--out", out, "dataset file (.bvcd)")->required();
  simulate->add_option("--n", n, "number of examples (balanced total with --balance)");
  simulate->add_option("--seed", seed, "simulation seed");
  simulate->add_flag("--balance", balance, "undersample to equal class counts");

  auto* train = app.add_subcommand("train", "train a classifier on the training split");
  add_common(train, common);
  train->add_option("--data", data, "dataset file")->required();
  train->add_option("--head", head, "standard or bayes")->check(CLI::IsMember({"standard", "bayes"}));
  train->add_option("--out", out, "checkpoint file (.bvc1)")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval, common);
  eval->add_option("--model", model, "checkpoint file")->required();
  eval->add_option("--data", data, "dataset file")->required();
  eval->add_option("--out", out, "report directory")->required();

  auto* mask_eval = app.add_subcommand("mask-eval", "compare unmasked and masked test predictions");
  add_common(mask_eval, common);
  mask_eval->add_option("--model", model, "checkpoint file")->required();
  mask_eval->add_option("--data", data, "dataset file")->required();
  mask_eval->add_option("--mask-rows", mask_rows, "rows to zero, LO..HI (1-based, inclusive)");
  mask_eval->add_option("--out", out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; malformed command lines are usage errors.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig config = resolve(common);
    if (simulate->parsed()) {
      if (n) config.count = *n;
      if (seed) config.sim.seed = *seed;
      if (balance) config.balance = true;
      bvc::cli::run_simulate(config, out, std::cout);
    } else if (train->parsed()) {
      if (!head.empty()) config.set("model.head", head);
      config.dataset_path = data;
      config.checkpoint_path = out;
      bvc::cli::run_train(config, data, out, std::cout);
    } else if (eval->parsed()) {
      config.dataset_path = data;
      config.checkpoint_path = model;
      config.report_dir = out;
      bvc::cli::run_eval(config, model, data, out, std::cout);
    } else {
      if (!mask_rows.empty()) config.set("eval.mask_rows", mask_rows);
      config.dataset_path = data;
      config.checkpoint_path = model;
      config.report_dir = out;
      bvc::cli::run_mask_eval(config, model, data, out, std::cout);
    }
  } catch (const bvc::UsageError& e) {
    std::cerr << "bvc: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bvc: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
