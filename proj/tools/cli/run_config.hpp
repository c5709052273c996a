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
#include <filesystem>
#include <string>
#include <vector>

#include "bvc/inference.hpp"
#include "bvc/model.hpp"
#include "bvc/pileup.hpp"
#include "bvc/trainer.hpp"

namespace bvc::cli {

// Fully resolved settings of one run. Sources, lowest priority first:
// built-in defaults, the config file, `--set key=value`, dedicated flags.
struct RunConfig {
  SimulatorConfig sim;
  std::size_t count = 8000;  // examples written by `simulate`
  bool balance = true;

  ModelSpec model;  // depth and width follow the dataset at train time
  TrainConfig train;

  std::size_t n_mc = 50;
  double tau = 0.6;
  std::size_t eval_batch_size = 64;
  RowRange mask_rows{31, 100};

  std::string dataset_path;
  std::string checkpoint_path;
  std::string report_dir;

  // Assigns one key. Unknown keys and unparsable values raise UsageError
  // naming the key.
  void set(const std::string& key, const std::string& value);

  // Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
  void apply_text(const std::string& text, const std::string& origin = "config");
  void apply_file(const std::filesystem::path& path);

  // Every key in documented order, one `key = value` line each. Parsing the
  // result reproduces this config exactly.
  std::string to_text() const;

  EvalOptions eval_options() const;
};

struct KeyDoc {
  std::string key;
  std::string description;
};

// Documentation of every accepted key.
const std::vector<KeyDoc>& config_keys();

}  // namespace bvc::cli
