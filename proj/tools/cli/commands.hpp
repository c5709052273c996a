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

#include <filesystem>
#include <ostream>

#include "run_config.hpp"

namespace bvc::cli {

// Each command is a pure function of its config: repeated runs write
// byte-identical files. Progress and summaries go to `log`.

// Writes a BVCD dataset and reports class counts.
void run_simulate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

// Trains on the training split of `data`. Writes the checkpoint, the epoch
// log `<out>.log.csv` and the resolved config `<out>.config.txt`.
void run_train(const RunConfig& config, const std::filesystem::path& data,
               const std::filesystem::path& out, std::ostream& log);

// Evaluates on the test split. Writes report.json, histogram.csv and
// config.txt under `out_dir`.
void run_eval(const RunConfig& config, const std::filesystem::path& model,
              const std::filesystem::path& data, const std::filesystem::path& out_dir,
              std::ostream& log);

// Evaluates the test split unmasked and with config.mask_rows zeroed. Writes
// report.json, histogram.csv, masked_report.json, masked_histogram.csv,
// ood_summary.json and config.txt under `out_dir`.
void run_mask_eval(const RunConfig& config, const std::filesystem::path& model,
                   const std::filesystem::path& data, const std::filesystem::path& out_dir,
                   std::ostream& log);

}  // namespace bvc::cli
