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

#include "mccbf/sync_dist.hpp"

#include <algorithm>
#include <string>

namespace mccbf::sdbf {

BsLocalState BsLocalState::initial(int n, const ici::IciLayout& layout, double c) {
  BsLocalState s;
  s.n = n;
  s.v_n = Eigen::VectorXd::Zero(layout.local_dim());
  s.nu = Eigen::VectorXd::Zero(layout.local_dim());
  s.v_tilde = Eigen::VectorXd::Zero(layout.global_dim());
  s.c = c;
  return s;
}

conic::SdpProblem build_local_problem(const BsLocalState& state, const ChannelSet& channels, const SystemConfig& cfg,
                                      const ici::IciLayout& layout) {
  const int n = state.n;
  const int k_users = cfg.users;
  const int dim = layout.local_dim();
  if (state.c <= 0.0) throw InvalidDimensions("ADMM penalty must be positive");
  if (state.v_tilde.size() != layout.global_dim() || state.nu.size() != dim) {
    throw InvalidDimensions("local state does not match the ICI layout");
  }
  conic::SdpProblem p;
  for (int k = 0; k < k_users; ++k) {
    p.add_block("G_" + std::to_string(n + 1) + std::to_string(k + 1), static_cast<std::size_t>(cfg.antennas),
                cfg.beta(n));
  }
  std::vector<std::size_t> v(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] = p.add_scalar("v" + std::to_string(j), -state.nu(j));
  const auto t = p.add_scalar("t", 1.0);

  for (int m = 0; m < cfg.cells; ++m) {
    if (m == n) continue;
    for (int k = 0; k < k_users; ++k) {
      conic::TraceConstraint c;
      for (int i = 0; i < k_users; ++i) c.rank_one.push_back({static_cast<std::size_t>(i), -1.0, channels.h(n, m, k)});
      c.scalars.push_back({v[static_cast<std::size_t>(layout.local_out_index(n, m, k))], 1.0});
      c.sense = conic::Sense::Equal;
      c.rhs = 0.0;
      c.label = "ici_" + std::to_string(m + 1) + std::to_string(k + 1);
      p.add_constraint(std::move(c));
    }
  }
  for (int k = 0; k < k_users; ++k) {
    conic::TraceConstraint c;
    const auto& h = channels.h(n, n, k);
    c.rank_one.push_back({static_cast<std::size_t>(k), 1.0 / cfg.gamma(n, k), h});
    for (int i = 0; i < k_users; ++i) {
      if (i != k) c.rank_one.push_back({static_cast<std::size_t>(i), -1.0, h});
    }
    c.scalars.push_back({v[static_cast<std::size_t>(layout.local_sum_index(k))], -1.0});
    c.sense = conic::Sense::GreaterEqual;
    c.rhs = cfg.sigma2(n, k);
    c.label = "sinr_" + std::to_string(k + 1);
    p.add_constraint(std::move(c));
  }

  // (c/2)||a - v_n||^2 <= t  as  [[(2/c) I, a - v_n], [(a - v_n)^T, t]] >= 0.
  const Eigen::VectorXd a = layout.w(n) * state.v_tilde;
  conic::LmiConstraint lmi;
  lmi.constant = CMatrix::Zero(dim + 1, dim + 1);
  lmi.constant.topLeftCorner(dim, dim).diagonal().setConstant(2.0 / state.c);
  lmi.constant.col(dim).head(dim) = a.cast<std::complex<double>>();
  lmi.constant.row(dim).head(dim) = a.transpose().cast<std::complex<double>>();
  for (int j = 0; j < dim; ++j) {
    CMatrix e = CMatrix::Zero(dim + 1, dim + 1);
    e(j, dim) = -1.0;
    e(dim, j) = -1.0;
    lmi.scalars.push_back({v[static_cast<std::size_t>(j)], e});
  }
  CMatrix et = CMatrix::Zero(dim + 1, dim + 1);
  et(dim, dim) = 1.0;
  lmi.scalars.push_back({t, et});
  lmi.label = "tracking";
  p.add_lmi(std::move(lmi));
  return p;
}

LocalResult local_subproblem(const BsLocalState& state, const ChannelSet& channels, const SystemConfig& cfg,
                             const ici::IciLayout& layout, const conic::SolverOptions& solver) {
  const auto prob = build_local_problem(state, channels, cfg, layout);
  const auto sol = conic::solve_sdp(prob, solver);
  LocalResult r;
  r.status = sol.status;
  if (sol.status != conic::SolveStatus::Optimal) {
    r.v_n = state.v_n;
    r.blocks = state.blocks;
    for (const auto& b : r.blocks) r.power += b.trace().real();
    return r;
  }
  r.feasible = true;
  r.v_n = Eigen::Map<const Eigen::VectorXd>(sol.scalars.data(), layout.local_dim());
  r.blocks = sol.blocks;
  for (const auto& b : r.blocks) r.power += b.trace().real();
  return r;
}

Eigen::VectorXd dual_update(const Eigen::VectorXd& nu, double c, const Eigen::VectorXd& w_v,
                            const Eigen::VectorXd& v_n) {
  return nu + c * (w_v - v_n);
}

Eigen::VectorXd global_update(const Eigen::VectorXd& v_stack, const Eigen::VectorXd& nu_stack, double c,
                              const ici::IciLayout& layout) {
  return layout.w_pinv() * (v_stack - nu_stack / c);
}

LocalSolver nominal_local_solver(const ChannelSet& channels, const SystemConfig& cfg, const ici::IciLayout& layout,
                                 const conic::SolverOptions& solver) {
  auto sub = channel_subspace(channels, cfg);
  if (!sub) {
    return [&channels, &cfg, &layout, solver](const BsLocalState& s) {
      return local_subproblem(s, channels, cfg, layout, solver);
    };
  }
  // Solve in the channel span of each BS; the state keeps full-dimension blocks.
  return [sub = std::move(*sub), &layout, solver](const BsLocalState& s) {
    BsLocalState reduced = s;
    for (auto& b : reduced.blocks) b = sub.basis[static_cast<std::size_t>(s.n)].adjoint() * b * sub.basis[static_cast<std::size_t>(s.n)];
    auto r = local_subproblem(reduced, sub.channels, sub.cfg, layout, solver);
    for (auto& b : r.blocks) b = sub.lift(s.n, b);
    return r;
  };
}

FdBeamformers principal_beamformers(const SystemConfig& cfg, const std::vector<LocalResult>& latest) {
  FdBeamformers bf(cfg.cells, cfg.users, cfg.antennas);
  for (int n = 0; n < cfg.cells; ++n) {
    const auto& blocks = latest[static_cast<std::size_t>(n)].blocks;
    for (int k = 0; k < cfg.users && static_cast<std::size_t>(k) < blocks.size(); ++k) {
      const auto& b = blocks[static_cast<std::size_t>(k)];
      const auto pp = conic::extract_principal(b);
      bf.at(n, k) = std::sqrt(std::max(pp.eigenvalue, 0.0)) * pp.eigenvector;
      const double tr = b.trace().real();
      bf.rank_one[static_cast<std::size_t>(n * cfg.users + k)] = tr <= 0.0 || pp.eigenvalue >= (1.0 - 1e-6) * tr;
    }
  }
  return bf;
}

Finalizer principal_finalizer(const ChannelSet& channels, const SystemConfig& cfg) {
  return [&channels, &cfg](const Eigen::VectorXd&, const std::vector<LocalResult>& latest) {
    auto bf = principal_beamformers(cfg, latest);
    bf.sinr = metrics::sinr(bf, channels, cfg);
    return std::optional<FdBeamformers>(std::move(bf));
  };
}

double total_power(const std::vector<double>& bs_power, const SystemConfig& cfg) {
  double s = 0.0;
  for (std::size_t n = 0; n < bs_power.size(); ++n) s += cfg.beta(static_cast<int>(n)) * bs_power[n];
  return s;
}

double consensus_residual(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& locals,
                          const ici::IciLayout& layout) {
  double r = 0.0;
  for (int n = 0; n < layout.cells(); ++n) {
    r = std::max(r, (layout.w(n) * v - locals[static_cast<std::size_t>(n)]).norm());
  }
  return r;
}

metrics::ExperimentTrace run_admm(const SystemConfig& cfg, const ici::IciLayout& layout, const LocalSolver& solve,
                                  const Finalizer& finalize, const AdmmOptions& opt) {
  const int n_cells = layout.cells();
  double c = opt.c;
  std::vector<BsLocalState> states;
  for (int n = 0; n < n_cells; ++n) states.push_back(BsLocalState::initial(n, layout, c));
  std::vector<LocalResult> latest(static_cast<std::size_t>(n_cells));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.global_dim());
  metrics::ExperimentTrace trace;
  auto& sum = trace.summary;
  sum.local_iterations.assign(static_cast<std::size_t>(n_cells), 0);
  sum.participations.assign(static_cast<std::size_t>(n_cells), 0);

  for (int it = 1; it <= opt.max_outer; ++it) {
    bool all_feasible = true;
    std::vector<Eigen::VectorXd> locals, duals;
    for (int n = 0; n < n_cells; ++n) {
      auto& s = states[static_cast<std::size_t>(n)];
      auto r = solve(s);
      if (!r.feasible) ++sum.local_infeasible;
      all_feasible = all_feasible && r.feasible;
      s.v_n = r.v_n;
      s.blocks = r.blocks;
      locals.push_back(s.v_n);
      duals.push_back(s.nu);
      latest[static_cast<std::size_t>(n)] = std::move(r);
    }
    const Eigen::VectorXd v_prev = v;
    v = global_update(layout.stack(locals), layout.stack(duals), c, layout);
    for (int n = 0; n < n_cells; ++n) {
      auto& s = states[static_cast<std::size_t>(n)];
      s.nu = dual_update(s.nu, c, layout.w(n) * v, s.v_n);
      s.v_tilde = v;
      ++s.clock;
      ++sum.participations[static_cast<std::size_t>(n)];
    }
    const double residual = consensus_residual(v, locals, layout);

    metrics::TraceRow row;
    row.iteration = it;
    for (const auto& r : latest) row.bs_power.push_back(r.power);
    row.total_power = total_power(row.bs_power, cfg);
    row.residual = residual;
    row.feasible = all_feasible;
    trace.rows.push_back(row);
    sum.iterations = it;
    sum.final_power = row.total_power;
    sum.final_residual = residual;

    if (residual <= opt.stop_tol) {
      if (auto bf = finalize(v, latest)) {
        sum.converged = true;
        sum.feasible = all_feasible;
        trace.beamformers = std::move(*bf);
        break;
      }
    }
    if (opt.residual_balancing) {
      const double dual_res = c * (layout.w_stack() * (v - v_prev)).norm();
      double scale = 1.0;
      if (residual > 10.0 * dual_res) scale = 2.0;
      if (dual_res > 10.0 * residual) scale = 0.5;
      c *= scale;
      for (auto& s : states) s.c = c;
    }
  }
  for (int n = 0; n < n_cells; ++n) sum.local_iterations[static_cast<std::size_t>(n)] = states[static_cast<std::size_t>(n)].clock;
  if (!sum.converged) {
    trace.beamformers = principal_beamformers(cfg, latest);
  }
  trace.consensus = v;
  return trace;
}

metrics::ExperimentTrace run_sdbf(const ChannelSet& channels, const SystemConfig& cfg, const AdmmOptions& opt) {
  cfg.validate();
  const ici::IciLayout layout(cfg.cells, cfg.users);
  return run_admm(cfg, layout, nominal_local_solver(channels, cfg, layout, opt.solver),
                  principal_finalizer(channels, cfg), opt);
}

}  // namespace mccbf::sdbf
