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

// mccbf command-line driver.
//
// Settings are layered: experiment preset, then the --config file, then flags.

#include "mccbf/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using mccbf::harness::ExperimentSpec;

struct Overrides {
  std::string config;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ExperimentSpec build_spec(const std::string& id, const Overrides& o) {
  auto spec = mccbf::harness::default_spec(id);
  if (!o.config.empty()) mccbf::harness::apply_config_file(spec, o.config);
  if (o.trials) spec.trials = *o.trials;
  if (o.seed) spec.seed = *o.seed;
  if (o.threads) spec.threads = *o.threads;
  spec.validate();
  return spec;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI file applied on top of the preset")->check(CLI::ExistingFile);
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--threads", o.threads, "Worker threads (output does not depend on this)");
}

int run(const std::string& experiment, const Overrides& o, const std::string& out_dir) {
  std::vector<std::string> ids;
  if (experiment == "all") {
    ids = mccbf::harness::experiment_ids();
  } else {
    ids = {experiment};
  }
  for (const auto& id : ids) {
    const auto spec = build_spec(id, o);
    const auto tables = mccbf::harness::run_experiment(spec);
    for (const auto& path : mccbf::harness::write_tables(tables, spec, out_dir)) {
      std::cout << path.string() << '\n';
    }
  }
  return 0;
}

int compare(const std::string& experiment, const Overrides& o, const std::string& out_dir) {
  const auto spec = build_spec(experiment, o);
  mccbf::SystemConfig cfg = spec.system;
  cfg.seed = mccbf::derive_seed(spec.seed, {0});
  const auto channels = mccbf::sample_channels(cfg, cfg.seed);
  const auto report = mccbf::harness::compare_pipelines(channels, cfg, spec);
  const auto table = mccbf::harness::report_table(report);
  mccbf::harness::write_table(table, spec, std::cout);
  for (const auto& c : report.checks) {
    std::cout << (c.skipped ? "SKIP " : (c.passed ? "PASS " : "FAIL ")) << c.name << ' ' << c.detail << '\n';
  }
  if (!out_dir.empty()) mccbf::harness::write_tables({table}, spec, out_dir);
  return 0;
}

int verify(const std::string& experiment, const Overrides& o, const std::string& out_dir) {
  const auto spec = build_spec(experiment, o);
  const auto report = mccbf::harness::verify(spec);
  const auto table = mccbf::harness::verify_table(report);
  if (!out_dir.empty()) mccbf::harness::write_tables({table}, spec, out_dir);
  for (const auto& c : report.checks) {
    if (!c.passed) std::cout << "FAIL " << c.name << ' ' << c.detail << '\n';
  }
  std::cout << report.instances << " instances, " << report.checks.size() << " checks, " << report.violations()
            << " violations\n";
  return report.violations() == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinated multi-cell beamforming simulator"};
  app.require_subcommand(1);

  Overrides run_o, cmp_o, ver_o;
  std::string run_exp, cmp_exp = "compare", ver_exp = "verify";
  std::string run_out = "results", cmp_out, ver_out;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep and write CSV tables");
  run_cmd->add_option("--experiment", run_exp, "Experiment id or 'all'")->required();
  run_cmd->add_option("--out-dir", run_out, "Directory for CSV output");
  add_common(run_cmd, run_o);

  auto* cmp_cmd = app.add_subcommand("compare", "Run every pipeline on one instance");
  cmp_cmd->add_option("--experiment", cmp_exp, "Preset supplying the system configuration");
  cmp_cmd->add_option("--out-dir", cmp_out, "Directory for CSV output");
  add_common(cmp_cmd, cmp_o);

  auto* ver_cmd = app.add_subcommand("verify", "Check cross-pipeline invariants; exit 2 on violation");
  ver_cmd->add_option("--experiment", ver_exp, "Preset supplying the system configuration");
  ver_cmd->add_option("--out-dir", ver_out, "Directory for CSV output");
  add_common(ver_cmd, ver_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(run_exp, run_o, run_out);
    if (*cmp_cmd) return compare(cmp_exp, cmp_o, cmp_out);
    return verify(ver_exp, ver_o, ver_out);
  } catch (const mccbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
