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

#include "commands.hpp"

#include <fstream>
#include <string>

#include "bvc/checkpoint.hpp"
#include "bvc/errors.hpp"
#include "bvc/inference.hpp"
#include "bvc/trainer.hpp"

namespace bvc::cli {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw UsageError("failed writing '" + path.string() + "'");
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::filesystem::path with_suffix(const std::filesystem::path& path, const std::string& suffix) {
  return std::filesystem::path(path.string() + suffix);
}

std::string counts_line(const char* what, std::pair<std::size_t, std::size_t> counts) {
  return std::string(what) + ": negatives=" + std::to_string(counts.first) +
         " positives=" + std::to_string(counts.second) + "\n";
}

Model load_matching_model(const std::filesystem::path& path, const Dataset& ds) {
  Model model = load_checkpoint(path);
  if (model.spec().depth != ds.depth || model.spec().width != ds.width) {
    throw FormatError("checkpoint (BVC1 version 1) expects pileups of depth " +
                          std::to_string(model.spec().depth) + " and width " +
                          std::to_string(model.spec().width) + ", dataset has " +
                          std::to_string(ds.depth) + " and " + std::to_string(ds.width),
                      0);
  }
  return model;
}

Dataset test_split(const RunConfig& config, const std::filesystem::path& data) {
  return train_test_split(load_dataset(data), config.train).second;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& prefix) {
  write_text(dir / (prefix + "report.json"), report.to_json());
  write_text(dir / (prefix + "histogram.csv"), report.histogram.to_csv());
}

std::string report_line(const char* what, const EvalReport& r) {
  return std::string(what) + ": accuracy=" + std::to_string(r.accuracy) +
         " mean_entropy=" + std::to_string(r.mean_entropy) +
         " uncertain_fraction=" + std::to_string(r.uncertain_fraction) +
         " n=" + std::to_string(r.count) + "\n";
}

}  // namespace

void run_simulate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  Dataset ds;
  if (config.balance) {
    std::pair<std::size_t, std::size_t> generated;
    ds = simulate_balanced(config.sim, config.count, &generated);
    log << counts_line("generated", generated) << counts_line("balanced", ds.class_counts());
  } else {
    ds = simulate_dataset(config.sim, config.count);
    log << counts_line("generated", ds.class_counts());
  }
  save_dataset(ds, out);
  log << "wrote " << ds.size() << " examples to " << out.string() << "\n";
}

void run_train(const RunConfig& config, const std::filesystem::path& data,
               const std::filesystem::path& out, std::ostream& log) {
  const Dataset ds = load_dataset(data);
  ModelSpec spec = config.model;
  spec.depth = ds.depth;
  spec.width = ds.width;
  const Dataset train = train_test_split(ds, config.train).first;
  log << "training " << head_name(spec.head) << " model on " << train.size() << " examples\n";

  const TrainResult result = train_model(train, spec, config.train, [&](const EpochLog& e) {
    log << "epoch " << e.epoch << ": nll=" << e.nll << " kl=" << e.kl << " total=" << e.total
        << " train_accuracy=" << e.train_accuracy << "\n";
  });
  save_checkpoint(result.model, out);
  write_text(with_suffix(out, ".log.csv"), epoch_log_csv(result.log));
  RunConfig echo = config;
  echo.model = spec;
  write_text(with_suffix(out, ".config.txt"), echo.to_text());
  log << "wrote " << out.string() << "\n";
}

void run_eval(const RunConfig& config, const std::filesystem::path& model_path,
              const std::filesystem::path& data, const std::filesystem::path& out_dir,
              std::ostream& log) {
  const Dataset test = test_split(config, data);
  const Model model = load_matching_model(model_path, test);
  Rng rng = Rng::substream(config.train.seed, streams::eval);
  const EvalReport report = evaluate(model, test, config.eval_options(), rng);

  make_dir(out_dir);
  write_report(report, out_dir, "");
  write_text(out_dir / "config.txt", config.to_text());
  log << report_line("test", report);
}

void run_mask_eval(const RunConfig& config, const std::filesystem::path& model_path,
                   const std::filesystem::path& data, const std::filesystem::path& out_dir,
                   std::ostream& log) {
  const Dataset test = test_split(config, data);
  const Model model = load_matching_model(model_path, test);
  EvalOptions options = config.eval_options();
  if (config.mask_rows.last > test.depth) {
    throw DomainError("mask rows " + format_row_range(config.mask_rows) + " exceed the pileup depth " +
                      std::to_string(test.depth));
  }

  // Both passes use the same weight draws, so the comparison isolates the mask.
  Rng rng = Rng::substream(config.train.seed, streams::eval);
  const EvalReport in_dist = evaluate(model, test, options, rng);
  options.mask = config.mask_rows;
  rng = Rng::substream(config.train.seed, streams::eval);
  const EvalReport masked = evaluate(model, test, options, rng);
  const OodSummary summary = ood_report(in_dist, masked);

  make_dir(out_dir);
  write_report(in_dist, out_dir, "");
  write_report(masked, out_dir, "masked_");
  write_text(out_dir / "ood_summary.json", summary.to_json());
  write_text(out_dir / "config.txt", config.to_text());
  log << report_line("test", in_dist) << report_line("masked", masked)
      << "entropy_delta=" << summary.entropy_delta << " mid_mass_in=" << summary.mid_mass_in
      << " mid_mass_masked=" << summary.mid_mass_masked << "\n";
}

}  // namespace bvc::cli
