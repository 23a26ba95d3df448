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

#include "mccbf/centralized.hpp"

#include "mccbf/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mccbf::centralized {

conic::SdpProblem build_sdr_problem(const ChannelSet& channels, const SystemConfig& cfg) {
  cfg.validate();
  const int n_cells = cfg.cells;
  const int k_users = cfg.users;
  if (channels.cells() != n_cells || channels.users() != k_users || channels.antennas() != cfg.antennas) {
    throw conic::DimensionMismatch("channel set does not match the system configuration");
  }
  conic::SdpProblem p;
  for (int n = 0; n < n_cells; ++n) {
    for (int k = 0; k < k_users; ++k) {
      p.add_block("G_" + std::to_string(n + 1) + std::to_string(k + 1), static_cast<std::size_t>(cfg.antennas),
                  cfg.beta(n));
    }
  }
  auto block = [&](int n, int k) { return static_cast<std::size_t>(n * k_users + k); };
  for (int n = 0; n < n_cells; ++n) {
    for (int k = 0; k < k_users; ++k) {
      conic::TraceConstraint c;
      const auto& h = channels.h(n, n, k);
      c.rank_one.push_back({block(n, k), 1.0 / cfg.gamma(n, k), h});
      for (int i = 0; i < k_users; ++i) {
        if (i != k) c.rank_one.push_back({block(n, i), -1.0, h});
      }
      for (int m = 0; m < n_cells; ++m) {
        if (m == n) continue;
        for (int i = 0; i < k_users; ++i) c.rank_one.push_back({block(m, i), -1.0, channels.h(m, n, k)});
      }
      c.sense = conic::Sense::GreaterEqual;
      c.rhs = cfg.sigma2(n, k);
      c.label = "sinr_" + std::to_string(n + 1) + std::to_string(k + 1);
      p.add_constraint(std::move(c));
    }
  }
  return p;
}

MarginFn nominal_margin(const ChannelSet& channels, const SystemConfig& cfg) {
  return [&channels, &cfg](const FdBeamformers& bf) {
    Eigen::MatrixXd a(bf.cells, bf.users);
    for (int n = 0; n < bf.cells; ++n) {
      for (int k = 0; k < bf.users; ++k) {
        // signal / gamma - interference, without noise
        const double s = metrics::sinr_of(n, k, bf, channels, 0.0);
        const auto& h = channels.h(n, n, k);
        const double signal = std::norm(h.dot(bf.at(n, k)));
        const double interference = std::isfinite(s) && s > 0.0 ? signal / s : 0.0;
        a(n, k) = signal / cfg.gamma(n, k) - interference;
      }
    }
    return a;
  };
}

namespace {

// Smallest common factor s making every user satisfy s * a >= sigma2; +inf if none.
double common_scale(const Eigen::MatrixXd& a, const SystemConfig& cfg) {
  double s = 0.0;
  for (int n = 0; n < a.rows(); ++n) {
    for (int k = 0; k < a.cols(); ++k) {
      if (!(a(n, k) > 0.0)) return std::numeric_limits<double>::infinity();
      s = std::max(s, cfg.sigma2(n, k) / a(n, k));
    }
  }
  return s;
}

}  // namespace

FdBeamformers extract_beamformers(const std::vector<CMatrix>& blocks, const SystemConfig& cfg,
                                  const MarginFn& margin, Rng& rng, const ExtractOptions& opt) {
  const int n_cells = cfg.cells;
  const int k_users = cfg.users;
  FdBeamformers bf(n_cells, k_users, cfg.antennas);
  bool all_rank_one = true;
  std::vector<Eigen::SelfAdjointEigenSolver<CMatrix>> eig(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto pp = conic::extract_principal(blocks[b]);
    eig[b].compute(0.5 * (blocks[b] + blocks[b].adjoint()));
    const auto& vals = eig[b].eigenvalues();
    const double l1 = std::max(pp.eigenvalue, 0.0);
    const double l2 = vals.size() > 1 ? std::max(vals(vals.size() - 2), 0.0) : 0.0;
    const bool r1 = l1 == 0.0 || l2 <= opt.rank_tol * l1;
    bf.rank_one[b] = r1;
    all_rank_one = all_rank_one && r1;
    bf.g[b] = std::sqrt(l1) * pp.eigenvector;
  }
  if (all_rank_one) return bf;

  // Principal-eigenvector candidate first, then Gaussian draws.
  FdBeamformers best = bf;
  double best_power = std::numeric_limits<double>::infinity();
  auto consider = [&](FdBeamformers cand) {
    const double s = common_scale(margin(cand), cfg);
    if (!std::isfinite(s) || s > opt.max_scale) return;
    const double root = std::sqrt(s);
    for (auto& g : cand.g) g *= root;
    const double pw = cand.weighted_power(cfg);
    if (pw < best_power) {
      best_power = pw;
      best = std::move(cand);
    }
  };
  consider(bf);
  for (int r = 0; r < opt.n_rand; ++r) {
    FdBeamformers cand = bf;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (bf.rank_one[b]) continue;
      const auto& vals = eig[b].eigenvalues();
      const auto& vecs = eig[b].eigenvectors();
      CVector g = CVector::Zero(vals.size());
      for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) > 0.0) g += std::sqrt(vals(i)) * complex_normal(rng) * vecs.col(i);
      }
      cand.g[b] = g;
    }
    consider(std::move(cand));
  }
  if (!std::isfinite(best_power)) throw ExtractionFailed("no randomized candidate meets every SINR target");
  return best;
}

FdBeamformers extract_beamformers(const conic::SdpSolution& solution, const ChannelSet& channels,
                                  const SystemConfig& cfg, Rng& rng, const ExtractOptions& opt) {
  FdBeamformers bf = extract_beamformers(solution.blocks, cfg, nominal_margin(channels, cfg), rng, opt);
  bf.sinr = metrics::sinr(bf, channels, cfg);
  return bf;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Feasible:
      return "feasible";
    case Outcome::Infeasible:
      return "infeasible";
    case Outcome::ExtractionFailed:
      return "extraction_failed";
    case Outcome::SolverFailed:
      return "solver_failed";
  }
  return "unknown";
}

CentralizedResult solve_centralized(const ChannelSet& channels, const SystemConfig& cfg,
                                    const conic::SolverOptions& solver, const ExtractOptions& opt) {
  CentralizedResult res;
  cfg.validate();
  const auto sub = channel_subspace(channels, cfg);
  auto sol = conic::solve_sdp(sub ? build_sdr_problem(sub->channels, sub->cfg) : build_sdr_problem(channels, cfg), solver);
  if (sub) {
    for (std::size_t j = 0; j < sol.blocks.size(); ++j) sol.blocks[j] = sub->lift(static_cast<int>(j) / cfg.users, sol.blocks[j]);
  }
  res.status = sol.status;
  if (sol.status == conic::SolveStatus::Infeasible) {
    res.outcome = Outcome::Infeasible;
    return res;
  }
  if (sol.status != conic::SolveStatus::Optimal) return res;
  res.sdp_objective = sol.objective;
  Rng rng(derive_seed(cfg.seed, {0x5d2u}));
  try {
    res.beamformers = extract_beamformers(sol, channels, cfg, rng, opt);
    res.outcome = Outcome::Feasible;
  } catch (const ExtractionFailed&) {
    res.outcome = Outcome::ExtractionFailed;
  }
  return res;
}

}  // namespace mccbf::centralized
