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

// Hybrid precoder factorization: sparse Bayesian learning EM and SOMP.

#pragma once

#include "mccbf/channel.hpp"

#include <Eigen/Dense>
#include <vector>

namespace mccbf::hybrid {

struct HybridPrecoder {
  std::vector<int> support;  // dictionary column indices, size N_rf
  CMatrix g_rf;              // N_t x N_rf
  CMatrix g_bb;              // N_rf x K
  double residual = 0.0;     // ||G_opt - G_rf G_bb||_F
  bool converged = true;
  int iterations = 0;
};

struct BlOptions {
  double sigma_e2 = 1e-3;
  double rho = 1e-5;
  int eta_max = 50;
  double gamma_floor = 1e-12;
  double max_condition = 1e14;
};

struct Posterior {
  CMatrix mean;  // G x K
  CMatrix cov;   // G x G
};

// Throws SingularCovariance when the innovation matrix is too ill-conditioned.
Posterior bl_posterior(const Eigen::VectorXd& gamma, double sigma_e2, const CMatrix& dict, const CMatrix& g_opt,
                       double max_condition = 1e14);

Eigen::VectorXd bl_m_step(const CMatrix& mean, const CMatrix& cov, int users, double floor = 1e-12);

HybridPrecoder bl_decompose(const CMatrix& g_opt, const CMatrix& dict, int n_rf, const BlOptions& opt = {});

HybridPrecoder somp_decompose(const CMatrix& g_opt, const CMatrix& dict, int n_rf);

// Stacks the K beamformers of BS n as the columns of an N_t x K matrix.
CMatrix precoder_matrix(const FdBeamformers& bf, int n);

FdBeamformers to_beamformers(const std::vector<HybridPrecoder>& per_bs, int users, int antennas);

struct HybridEvaluation {
  Eigen::MatrixXd sinr;
  double sum_rate = 0.0;
};

HybridEvaluation evaluate_hybrid(const ChannelSet& channels, const std::vector<HybridPrecoder>& per_bs,
                                 const SystemConfig& cfg);

}  // namespace mccbf::hybrid
