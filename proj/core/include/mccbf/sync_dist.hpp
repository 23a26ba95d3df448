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

// Synchronous ADMM beamforming over the ICI consensus variables.

#pragma once

#include "mccbf/channel.hpp"
#include "mccbf/conic.hpp"
#include "mccbf/ici.hpp"
#include "mccbf/metrics.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace mccbf::sdbf {

struct AdmmOptions {
  double c = 1.0;
  int max_outer = 300;
  double stop_tol = 1e-4;
  // Doubles or halves c when the primal and dual residuals differ by more than 10x.
  bool residual_balancing = false;
  conic::SolverOptions solver;
};

struct BsLocalState {
  int n = 0;
  Eigen::VectorXd v_n;      // local ICI copy, layout.local_dim()
  Eigen::VectorXd nu;       // dual, layout.local_dim()
  Eigen::VectorXd v_tilde;  // last global v seen, layout.global_dim()
  std::vector<CMatrix> blocks;
  int clock = 0;
  double c = 1.0;

  static BsLocalState initial(int n, const ici::IciLayout& layout, double c);
};

struct LocalResult {
  Eigen::VectorXd v_n;
  std::vector<CMatrix> blocks;
  double power = 0.0;  // sum_k Tr(G_nk)
  bool feasible = false;
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
};

conic::SdpProblem build_local_problem(const BsLocalState& state, const ChannelSet& channels, const SystemConfig& cfg,
                                      const ici::IciLayout& layout);

// An infeasible local set is reported through LocalResult::feasible; v_n and the
// blocks then carry over from the state.
LocalResult local_subproblem(const BsLocalState& state, const ChannelSet& channels, const SystemConfig& cfg,
                             const ici::IciLayout& layout, const conic::SolverOptions& solver = {});

Eigen::VectorXd dual_update(const Eigen::VectorXd& nu, double c, const Eigen::VectorXd& w_v,
                            const Eigen::VectorXd& v_n);

Eigen::VectorXd global_update(const Eigen::VectorXd& v_stack, const Eigen::VectorXd& nu_stack, double c,
                              const ici::IciLayout& layout);

using LocalSolver = std::function<LocalResult(const BsLocalState&)>;

// Called once the consensus residual meets the stopping tolerance. Returning
// nothing rejects the consensus and the loop keeps iterating.
using Finalizer =
    std::function<std::optional<FdBeamformers>(const Eigen::VectorXd& v, const std::vector<LocalResult>& latest)>;

LocalSolver nominal_local_solver(const ChannelSet& channels, const SystemConfig& cfg, const ici::IciLayout& layout,
                                 const conic::SolverOptions& solver = {});

FdBeamformers principal_beamformers(const SystemConfig& cfg, const std::vector<LocalResult>& latest);

// Principal eigenvectors of the latest local blocks; always accepts.
Finalizer principal_finalizer(const ChannelSet& channels, const SystemConfig& cfg);

// Weighted total power sum_n beta_n p_n.
double total_power(const std::vector<double>& bs_power, const SystemConfig& cfg);

double consensus_residual(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& locals,
                          const ici::IciLayout& layout);

metrics::ExperimentTrace run_admm(const SystemConfig& cfg, const ici::IciLayout& layout, const LocalSolver& solve,
                                  const Finalizer& finalize, const AdmmOptions& opt);

metrics::ExperimentTrace run_sdbf(const ChannelSet& channels, const SystemConfig& cfg, const AdmmOptions& opt = {});

}  // namespace mccbf::sdbf
