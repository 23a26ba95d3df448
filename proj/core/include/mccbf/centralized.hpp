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

// Centralized SDR power minimization and beamformer extraction.

#pragma once

#include "mccbf/channel.hpp"
#include "mccbf/conic.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mccbf::centralized {

// Block index of G_nk is n*K + k.
conic::SdpProblem build_sdr_problem(const ChannelSet& channels, const SystemConfig& cfg);

struct ExtractOptions {
  double rank_tol = 1e-6;  // lambda_2 / lambda_1
  int n_rand = 100;
  double max_scale = 1e4;  // cap on the common power rescale factor
};

// For a candidate set, per-user value a_nk such that scaling every beamformer
// by sqrt(s) meets user (n,k) iff s * a_nk >= sigma2_nk.
using MarginFn = std::function<Eigen::MatrixXd(const FdBeamformers&)>;

MarginFn nominal_margin(const ChannelSet& channels, const SystemConfig& cfg);

// Rank-one extraction where possible, Gaussian randomization otherwise.
// Throws ExtractionFailed.
FdBeamformers extract_beamformers(const std::vector<CMatrix>& blocks, const SystemConfig& cfg,
                                  const MarginFn& margin, Rng& rng, const ExtractOptions& opt = {});
FdBeamformers extract_beamformers(const conic::SdpSolution& solution, const ChannelSet& channels,
                                  const SystemConfig& cfg, Rng& rng, const ExtractOptions& opt = {});

enum class Outcome { Feasible, Infeasible, ExtractionFailed, SolverFailed };

const char* to_string(Outcome o);

struct CentralizedResult {
  Outcome outcome = Outcome::SolverFailed;
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
  double sdp_objective = 0.0;
  std::optional<FdBeamformers> beamformers;
};

CentralizedResult solve_centralized(const ChannelSet& channels, const SystemConfig& cfg,
                                    const conic::SolverOptions& solver = {}, const ExtractOptions& opt = {});

}  // namespace mccbf::centralized
