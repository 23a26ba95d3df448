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

// Figures of merit and the per-iteration trace shared by the distributed
// solvers.

#pragma once

#include "mccbf/channel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mccbf::metrics {

// Gamma_nk for every user, N x K.
Eigen::MatrixXd sinr(const FdBeamformers& bf, const ChannelSet& channels, const SystemConfig& cfg);
double sinr_of(int n, int k, const FdBeamformers& bf, const ChannelSet& channels, double sigma2);

double sum_rate(const Eigen::MatrixXd& sinrs);

// Percentage of true entries.
double feasibility_rate(const std::vector<bool>& outcomes);

double normalized_power_accuracy(double p_hat, double p_ref);

// Power in dBm for a value in mW.
double to_dbm(double p_mw);

enum class OverheadMode { Centralized, Adbf, PriorArt };

// Centralized: 2 N_t K N (N-1) channel coefficients, independent of iterations.
// ADBF: N K per iteration. Prior art: (N-1) N K per iteration.
std::uint64_t signaling_overhead(OverheadMode mode, int cells, int users, int antennas, int iterations);

struct TraceRow {
  int iteration = 0;
  long tick = -1;
  std::string event = "iterate";
  int bs_id = -1;
  std::vector<double> bs_power;
  double total_power = 0.0;
  double residual = 0.0;
  bool feasible = true;
  std::vector<int> tau;
};

struct TraceSummary {
  bool converged = false;
  bool feasible = false;
  bool aborted = false;
  int iterations = 0;
  long ticks = 0;
  double final_power = 0.0;
  double final_residual = 0.0;
  int local_infeasible = 0;
  std::vector<int> local_iterations;
  std::vector<int> participations;
};

struct ExperimentTrace {
  std::vector<TraceRow> rows;
  TraceSummary summary;
  FdBeamformers beamformers;
  Eigen::VectorXd consensus;
};

// Total power after each outer (SDBF) or CU (ADBF) iteration.
std::vector<double> power_series(const ExperimentTrace& trace);

// First iteration (1-based) from which accuracy stays <= threshold through the
// end of the series; -1 if never.
int iterations_to_accuracy(const std::vector<double>& powers, double p_ref, double threshold);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, t approximation
};
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

void write_sdbf_trace_csv(const ExperimentTrace& trace, std::ostream& os);
void write_adbf_trace_csv(const ExperimentTrace& trace, int cells, std::ostream& os);

}  // namespace mccbf::metrics
