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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "bvc/checkpoint.hpp"
#include "bvc/errors.hpp"
#include "bvc/inference.hpp"
#include "commands.hpp"
#include "run_config.hpp"
#include "test_util.hpp"

namespace bvc::cli {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny_config() {
  RunConfig c;
  c.apply_text(R"(
# small and fast
sim.depth = 8
sim.width = 3
sim.coverage = 6
sim.positive_fraction = 0.4
sim.count = 60
model.hidden1 = 3
model.hidden2 = 3
model.dense_units = 3
train.epochs = 1
train.batch_size = 16
eval.n_mc = 4
eval.mask_rows = 3..8
)");
  return c;
}

TEST(RunConfig, DefaultsMatchTheLibraryDefaults) {
  const RunConfig c;
  EXPECT_EQ(c.sim.depth, 100u);
  EXPECT_EQ(c.count, 8000u);
  EXPECT_EQ(c.train.epochs, 10u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.n_mc, 50u);
  EXPECT_EQ(c.tau, 0.6);
  EXPECT_EQ(c.mask_rows.first, 31u);
  EXPECT_EQ(c.mask_rows.last, 100u);
}

TEST(RunConfig, TextRoundTrip) {
  RunConfig c = tiny_config();
  c.set("train.prior_sigma", "0.25");
  c.set("model.head", "bayes");
  c.set("paths.report_dir", "out/x");
  RunConfig back;
  back.apply_text(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.train.prior.sigma, 0.25);
  EXPECT_EQ(back.model.head, HeadKind::variational_flipout);
  EXPECT_EQ(back.sim.coverage, 6.0);
  // Every documented key appears in the echo.
  for (const auto& k : config_keys()) EXPECT_NE(c.to_text().find(k.key + " = "), std::string::npos) << k.key;
}

TEST(RunConfig, UnknownKeyIsNamed) {
  RunConfig c;
  try {
    c.apply_text("sim.depth = 10\nsim.colour = red\n");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("sim.colour"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, BadValuesAreNamed) {
  RunConfig c;
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"train.epochs", "ten"}, {"eval.tau", "0.6x"}, {"sim.balance", "maybe"},
           {"model.head", "frequentist"}, {"eval.mask_rows", "5"}, {"train.kl_scaling", "epoch"}}) {
    try {
      c.set(key, value);
      FAIL() << key;
    } catch (const UsageError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(c.apply_text("just words\n"), UsageError);
  EXPECT_THROW(c.apply_file("/nonexistent/bvc.cfg"), UsageError);
}

TEST(Commands, SimulateIsDeterministic) {
  test::TempDir dir("cli-sim");
  RunConfig c = tiny_config();
  c.count = 100;
  c.sim.seed = 7;
  c.balance = false;
  std::ostringstream log;
  run_simulate(c, dir / "a.bvcd", log);
  run_simulate(c, dir / "b.bvcd", log);
  EXPECT_EQ(slurp(dir / "a.bvcd"), slurp(dir / "b.bvcd"));
  EXPECT_NE(log.str().find("generated: negatives="), std::string::npos);
}

TEST(Commands, SimulateBalances) {
  test::TempDir dir("cli-bal");
  RunConfig c = tiny_config();
  c.sim.positive_fraction = 0.25;
  c.balance = true;
  std::ostringstream log;
  run_simulate(c, dir / "d.bvcd", log);
  const Dataset ds = load_dataset(dir / "d.bvcd");
  EXPECT_EQ(ds.class_counts(), std::make_pair(std::size_t{30}, std::size_t{30}));
  EXPECT_NE(log.str().find("balanced: negatives=30 positives=30"), std::string::npos) << log.str();
}

TEST(Commands, PipelineWritesEveryArtifactReproducibly) {
  test::TempDir dir("cli-run");
  RunConfig c = tiny_config();
  std::ostringstream log;
  run_simulate(c, dir / "d.bvcd", log);

  c.set("model.head", "bayes");
  run_train(c, dir / "d.bvcd", dir / "m.bvc1", log);
  run_train(c, dir / "d.bvcd", dir / "m2.bvc1", log);
  EXPECT_EQ(slurp(dir / "m.bvc1"), slurp(dir / "m2.bvc1"));
  EXPECT_EQ(slurp(dir / "m.bvc1.log.csv"), slurp(dir / "m2.bvc1.log.csv"));
  EXPECT_EQ(slurp(dir / "m.bvc1.log.csv").substr(0, 33), "epoch,nll,kl,total,train_accuracy");
  EXPECT_TRUE(std::filesystem::exists(dir / "m.bvc1.config.txt"));

  run_eval(c, dir / "m.bvc1", dir / "d.bvcd", dir / "eval1", log);
  run_eval(c, dir / "m.bvc1", dir / "d.bvcd", dir / "eval2", log);
  EXPECT_EQ(slurp(dir / "eval1/histogram.csv"), slurp(dir / "eval2/histogram.csv"));
  EXPECT_EQ(slurp(dir / "eval1/report.json"), slurp(dir / "eval2/report.json"));
  const EvalReport r = EvalReport::from_json(slurp(dir / "eval1/report.json"));
  EXPECT_GE(r.accuracy, 0.0);
  EXPECT_LE(r.accuracy, 1.0);
  EXPECT_EQ(r.count, 12u);  // test split of 60

  run_mask_eval(c, dir / "m.bvc1", dir / "d.bvcd", dir / "mask", log);
  for (const char* f : {"report.json", "histogram.csv", "masked_report.json", "masked_histogram.csv",
                        "ood_summary.json", "config.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "mask" / f)) << f;
  }
  // The unmasked half of mask-eval is the plain evaluation.
  EXPECT_EQ(slurp(dir / "mask/report.json"), slurp(dir / "eval1/report.json"));
  const EvalReport masked = EvalReport::from_json(slurp(dir / "mask/masked_report.json"));
  const OodSummary s = ood_report(r, masked);
  EXPECT_EQ(slurp(dir / "mask/ood_summary.json"), s.to_json());
}

TEST(Commands, StandardHeadEvaluatesWithOneDraw) {
  test::TempDir dir("cli-std");
  RunConfig c = tiny_config();
  std::ostringstream log;
  run_simulate(c, dir / "d.bvcd", log);
  run_train(c, dir / "d.bvcd", dir / "m.bvc1", log);
  const std::string csv = slurp(dir / "m.bvc1.log.csv");
  EXPECT_NE(csv.find(",0.0,"), std::string::npos) << csv;  // kl column
  run_eval(c, dir / "m.bvc1", dir / "d.bvcd", dir / "e", log);
  EXPECT_EQ(EvalReport::from_json(slurp(dir / "e/report.json")).n_mc, 1u);
}

TEST(Commands, MismatchedCheckpointIsAFormatError) {
  test::TempDir dir("cli-mismatch");
  RunConfig c = tiny_config();
  std::ostringstream log;
  run_simulate(c, dir / "d.bvcd", log);
  run_train(c, dir / "d.bvcd", dir / "m.bvc1", log);
  RunConfig wider = c;
  wider.sim.width = 4;
  run_simulate(wider, dir / "w.bvcd", log);
  EXPECT_THROW(run_eval(c, dir / "m.bvc1", dir / "w.bvcd", dir / "e", log), FormatError);
  EXPECT_THROW(run_eval(c, dir / "absent.bvc1", dir / "d.bvcd", dir / "e", log), UsageError);
}

}  // namespace
}  // namespace bvc::cli
