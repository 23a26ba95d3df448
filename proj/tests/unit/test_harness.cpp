// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mccbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mccbf/harness.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace mccbf::harness {
namespace {

std::string render(const std::vector<Table>& tables, const ExperimentSpec& spec) {
  std::ostringstream os;
  for (const auto& t : tables) write_table(t, spec, os);
  return os.str();
}

TEST(Config, PresetsValidate) {
  for (const auto& id : experiment_ids()) EXPECT_NO_THROW(default_spec(id).validate()) << id;
  EXPECT_THROW(default_spec("nope"), ConfigError);
}

TEST(Config, IniOverridesPreset) {
  auto spec = default_spec("feasibility_vs_gamma");
  std::istringstream ini(
      "[system]\nantennas = 8\nsinr_target_db = 3\n[async]\nS = 2\n[sweep]\ngamma_db = 1, 2\n"
      "pipelines = centralized\n[run]\ntrials = 3\nseed = 9\n");
  apply_config(spec, ini);
  EXPECT_EQ(spec.system.antennas, 8);
  EXPECT_NEAR(spec.system.sinr_target, std::pow(10.0, 0.3), 1e-12);
  EXPECT_EQ(spec.async.S, 2);
  EXPECT_EQ(spec.gamma_db, (std::vector<double>{1.0, 2.0}));
  ASSERT_EQ(spec.pipelines.size(), 1u);
  EXPECT_EQ(spec.pipelines[0], Pipeline::Centralized);
  EXPECT_EQ(spec.trials, 3);
  EXPECT_EQ(spec.seed, 9u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto spec = default_spec("power_vs_gamma");
  std::istringstream unknown("[system]\nantenas = 8\n");
  EXPECT_THROW(apply_config(spec, unknown), ConfigError);
  std::istringstream bad("[admm]\nc = ten\n");
  EXPECT_THROW(apply_config(spec, bad), ConfigError);
  std::istringstream pipeline("[sweep]\npipelines = magic\n");
  EXPECT_THROW(apply_config(spec, pipeline), ConfigError);
  spec = default_spec("convergence_vs_S");
  spec.s_grid = {5};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Csv, NumbersRoundTrip) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, HeaderCarriesConfig) {
  auto spec = default_spec("feasibility_vs_gamma");
  Table t{"x", {"a", "b"}, {}};
  t.add({"1", "2"});
  EXPECT_THROW(t.add({"1"}), std::logic_error);
  std::ostringstream os;
  write_table(t, spec, os);
  const auto s = os.str();
  EXPECT_NE(s.find("experiment=feasibility_vs_gamma"), std::string::npos);
  EXPECT_NE(s.find("seed=1"), std::string::npos);
  EXPECT_NE(s.find("\na,b\n1,2\n"), std::string::npos);
}

TEST(ParallelMap, OrderAndErrors) {
  const auto v = parallel_map<int>(50, 4, [](int i) { return i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(parallel_map<int>(10, 3,
                                 [](int i) {
                                   if (i == 7) throw std::runtime_error("x");
                                   return i;
                                 }),
               std::runtime_error);
}

ExperimentSpec small_spec() {
  auto spec = default_spec("feasibility_vs_gamma");
  spec.system.antennas = 8;
  spec.gamma_db = {5, 25};
  spec.trials = 3;
  spec.pipelines = {Pipeline::Centralized, Pipeline::Adbf};
  return spec;
}

TEST(Experiment, DeterministicAndThreadInvariant) {
  auto spec = small_spec();
  const auto one = render(run_experiment(spec), spec);
  spec.threads = 3;
  const auto three = render(run_experiment(spec), spec);
  EXPECT_EQ(one, three);
  spec.seed = 2;
  EXPECT_NE(render(run_experiment(spec), spec), three);
}

TEST(Experiment, FeasibilityFallsWithTarget) {
  auto spec = small_spec();
  const auto tables = run_experiment(spec);
  ASSERT_EQ(tables.size(), 1u);
  const auto& rows = tables[0].rows;
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][2], "centralized");
  EXPECT_GE(std::stoi(rows[0][4]), std::stoi(rows[2][4]));
  EXPECT_GE(std::stoi(rows[1][4]), std::stoi(rows[3][4]));
  for (const auto& r : rows) EXPECT_EQ(r[6], "0");
}

TEST(Compare, ChecksPassOnNominalInstance) {
  auto spec = default_spec("compare");
  spec.system.antennas = 8;
  SystemConfig cfg = spec.system;
  cfg.seed = 11;
  const auto ch = sample_channels(cfg, cfg.seed);
  const auto rep = compare_pipelines(ch, cfg, spec);
  EXPECT_EQ(rep.rows.size(), 6u);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail;
  const auto t = report_table(rep);
  EXPECT_EQ(t.rows.size(), rep.rows.size());
}

TEST(Verify, NoViolationsOnSmallRun) {
  auto spec = default_spec("verify");
  spec.system.antennas = 8;
  spec.trials = 2;
  const auto rep = verify(spec);
  EXPECT_EQ(rep.violations(), 0) << render({verify_table(rep)}, spec);
}

}  // namespace
}  // namespace mccbf::harness
