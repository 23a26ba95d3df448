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

// Monte-Carlo experiment driver, cross-pipeline comparison and invariant checks.

#pragma once

#include "mccbf/async_proto.hpp"
#include "mccbf/hybrid.hpp"
#include "mccbf/robust.hpp"
#include "mccbf/sync_dist.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <thread>
#include <vector>

namespace mccbf::harness {

enum class Pipeline { Centralized, Sdbf, Adbf };

const char* to_string(Pipeline p);
// Throws ConfigError.
Pipeline parse_pipeline(const std::string& name);

struct ExperimentSpec {
  std::string id;
  SystemConfig system;
  adbf::AsyncConfig async;
  double c = 10.0;  // ADMM penalty for experiments; the solver default stays at 1
  int max_outer = 300;
  double stop_tol = 1e-4;
  double eps = 0.0;
  hybrid::BlOptions bl;
  double accuracy = 0.01;
  std::vector<double> gamma_db;
  std::vector<double> eps_grid;
  std::vector<int> antennas_grid;
  std::vector<int> s_grid;
  std::vector<int> tau_grid;
  std::vector<int> q_grid;
  std::vector<Pipeline> pipelines;
  int trials = 20;
  std::uint64_t seed = 1;
  int threads = 1;

  // Throws ConfigError or InvalidDimensions.
  void validate() const;
};

const std::vector<std::string>& experiment_ids();

// Settings of the matching figure; throws ConfigError for an unknown id.
ExperimentSpec default_spec(const std::string& id);

// Overrides from an INI file with [system], [async], [admm], [robust], [hybrid],
// [sweep] and [run] sections. Unknown keys throw ConfigError.
void apply_config(ExperimentSpec& spec, std::istream& ini);
void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path);

// Flat key=value listing of every setting, used in CSV headers.
std::string describe(const ExperimentSpec& spec);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

std::string format_number(double v);

// Comment lines with version, experiment, seed and configuration, then CSV.
void write_table(const Table& table, const ExperimentSpec& spec, std::ostream& os);
std::vector<std::filesystem::path> write_tables(const std::vector<Table>& tables, const ExperimentSpec& spec,
                                                const std::filesystem::path& out_dir);

// Runs fn(0..count-1) on up to `threads` workers; results are in index order,
// so the output does not depend on the thread count. The first exception thrown
// by any task is rethrown after all workers finish.
template <class T>
std::vector<T> parallel_map(int count, int threads, const std::function<T(int)>& fn) {
  std::vector<T> out(static_cast<std::size_t>(std::max(count, 0)));
  std::vector<std::exception_ptr> errors(out.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct TrialResult {
  bool feasible = false;
  bool converged = false;
  bool error = false;
  double power = 0.0;
  int iterations = 0;
  std::vector<double> series;  // total power per iteration (distributed only)
};

// One pipeline on one instance; robust variants are used when eps > 0.
// Distributed runs that stop without converging count as feasible when every BS
// recovers a feasible design from the final consensus.
TrialResult run_pipeline(Pipeline p, const ChannelSet& channels, const SystemConfig& cfg, const ExperimentSpec& spec,
                         double eps);

std::vector<Table> run_experiment(const ExperimentSpec& spec);

struct Check {
  std::string name;
  bool passed = true;
  bool skipped = false;
  std::string detail;
};

struct PipelineRow {
  std::string pipeline;
  bool feasible = false;
  bool converged = false;
  double power = 0.0;
  double min_sinr_db = 0.0;
  int iterations = 0;
};

struct CompareReport {
  std::vector<PipelineRow> rows;
  std::vector<Check> checks;
};

CompareReport compare_pipelines(const ChannelSet& channels, const SystemConfig& cfg, const ExperimentSpec& spec);
Table report_table(const CompareReport& report);

struct VerifyReport {
  int instances = 0;
  std::vector<Check> checks;

  int violations() const;
};

// compare_pipelines on spec.trials seeded instances, plus robust sampling and
// signaling-overhead checks.
VerifyReport verify(const ExperimentSpec& spec);
Table verify_table(const VerifyReport& report);

}  // namespace mccbf::harness
