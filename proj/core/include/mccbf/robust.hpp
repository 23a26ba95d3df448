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

// Worst-case beamforming under bounded CSI error.

#pragma once

#include "mccbf/async_proto.hpp"
#include "mccbf/centralized.hpp"
#include "mccbf/sync_dist.hpp"

#include <optional>
#include <vector>

namespace mccbf::robust {

struct UncertaintyModel {
  enum class Kind { Spherical, Ellipsoidal };
  Kind kind = Kind::Spherical;
  double eps = 0.0;              // radius for every link unless eps_link is set
  std::vector<double> eps_link;  // optional, indexed like ChannelSet::index
  std::vector<CMatrix> r_link;   // ellipsoidal shapes, xi^H R xi <= 1

  static UncertaintyModel spherical(double eps);

  // Throws InvalidDimensions.
  void validate(const ChannelSet& channels) const;
  bool exact(const ChannelSet& channels, int m, int n, int k) const;
};

// The S-lemma multiplier enters as mu * blockdiag(P, -q). For a ball of radius
// eps, P = I and q = eps^2; for an ellipsoid, P = R and q = 1.
struct LinkShape {
  CMatrix p;
  double q = 0.0;
};

LinkShape link_shape(const UncertaintyModel& unc, const ChannelSet& channels, int m, int n, int k);

// Phi: [[M + mu P, M h], [h^H M, h^H M h - sigma2 - sum(interference) - mu q]] >= 0 with
// M = G_k / gamma - sum_{i != k} G_i over the given blocks (the first is user k).
conic::LmiConstraint build_phi(const std::vector<std::size_t>& blocks, std::size_t user, double gamma,
                               const std::vector<std::size_t>& interference, double constant, std::size_t mu,
                               const CVector& h, const LinkShape& shape);

// Psi: [[-A + mu P, -A h], [-h^H A, v - h^H A h - mu q]] >= 0 with A = sum of the blocks.
// v is the scalar v_index if given, else the constant fixed_v.
conic::LmiConstraint build_psi(const std::vector<std::size_t>& blocks, std::optional<std::size_t> v_index,
                               double fixed_v, std::size_t mu, const CVector& h, const LinkShape& shape);

struct TrsResult {
  double value = 0.0;
  CVector xi;
};

// min over ||xi|| <= radius of xi^H A xi + 2 Re(b^H xi) + c0, A Hermitian.
TrsResult trs_min(const CMatrix& a, const CVector& b, double c0, double radius);

// max over the uncertainty set of (h + xi)^H A (h + xi).
double worst_case_quadratic(const CVector& h, const CMatrix& a, double eps);
double worst_case_quadratic(const CVector& h, const CMatrix& a, const LinkShape& shape);
double best_case_quadratic(const CVector& h, const CMatrix& a, const LinkShape& shape);

struct RobustSolution {
  centralized::Outcome outcome = centralized::Outcome::SolverFailed;
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
  double objective = 0.0;
  std::vector<CMatrix> blocks;
  std::vector<double> multipliers;  // reported lambda >= 0, Phi then Psi
  std::optional<FdBeamformers> beamformers;
  Eigen::MatrixXd margins;  // worst-case SINR - gamma from verify_robust_sinr
};

conic::SdpProblem build_robust_problem(const ChannelSet& channels, const SystemConfig& cfg,
                                       const UncertaintyModel& unc);

RobustSolution solve_robust_centralized(const ChannelSet& channels, const SystemConfig& cfg,
                                        const UncertaintyModel& unc, const conic::SolverOptions& solver = {},
                                        const centralized::ExtractOptions& extract = {});

// Per-user worst-case SINR minus gamma.
Eigen::MatrixXd verify_robust_sinr(const FdBeamformers& bf, const ChannelSet& channels, const UncertaintyModel& unc,
                                   const SystemConfig& cfg);

// Smallest SINR - gamma over independently sampled channel errors in the uncertainty set.
double sampled_min_margin(const FdBeamformers& bf, const ChannelSet& channels, const UncertaintyModel& unc,
                          const SystemConfig& cfg, int samples, Rng& rng);

centralized::MarginFn robust_margin(const ChannelSet& channels, const SystemConfig& cfg, const UncertaintyModel& unc);

conic::SdpProblem build_robust_local_problem(const sdbf::BsLocalState& state, const ChannelSet& channels,
                                             const SystemConfig& cfg, const ici::IciLayout& layout,
                                             const UncertaintyModel& unc);

sdbf::LocalResult solve_robust_local(const sdbf::BsLocalState& state, const ChannelSet& channels,
                                     const SystemConfig& cfg, const ici::IciLayout& layout,
                                     const UncertaintyModel& unc, const conic::SolverOptions& solver = {});

struct Recovery {
  bool feasible = false;
  std::vector<CMatrix> blocks;
  double power = 0.0;
};

// Minimum-power blocks for BS n with every ICI value fixed by the consensus v.
Recovery feasibility_recovery(int n, const Eigen::VectorXd& v, const ChannelSet& channels, const SystemConfig& cfg,
                              const ici::IciLayout& layout, const UncertaintyModel& unc,
                              const conic::SolverOptions& solver = {});

sdbf::Finalizer recovery_finalizer(const ChannelSet& channels, const SystemConfig& cfg, const ici::IciLayout& layout,
                                   const UncertaintyModel& unc, const conic::SolverOptions& solver = {});

metrics::ExperimentTrace run_robust_sdbf(const ChannelSet& channels, const SystemConfig& cfg,
                                         const UncertaintyModel& unc, const sdbf::AdmmOptions& opt = {});

metrics::ExperimentTrace run_robust_adbf(const ChannelSet& channels, const SystemConfig& cfg,
                                         const UncertaintyModel& unc, const adbf::AsyncConfig& async,
                                         const adbf::AsyncOptions& opt = {});

}  // namespace mccbf::robust
