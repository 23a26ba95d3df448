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

#include "mccbf/async_proto.hpp"

#include <algorithm>
#include <stdexcept>

namespace mccbf::adbf {

void AsyncConfig::validate(int cells) const {
  if (S < 1 || S > cells) throw InvalidDimensions("S must lie in [1, N]");
  if (tau < 1) throw InvalidDimensions("tau must be at least 1");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidDimensions("arrival probability must lie in (0, 1]");
  if (Q < 1) throw InvalidDimensions("CU iteration budget must be positive");
  if (delivery_delay < 0) throw InvalidDimensions("delivery delay must be nonnegative");
}

bool ArrivalModel::arrives(long tick, int bs) const {
  if (p_ >= 1.0) return true;
  return unit_uniform(derive_seed(seed_, {static_cast<std::uint64_t>(tick), static_cast<std::uint64_t>(bs)})) < p_;
}

CuState CuState::initial(const ici::IciLayout& layout) {
  CuState cu;
  const auto n = static_cast<std::size_t>(layout.cells());
  cu.v = Eigen::VectorXd::Zero(layout.global_dim());
  cu.v_hat.assign(n, Eigen::VectorXd::Zero(layout.local_dim()));
  cu.nu_hat.assign(n, Eigen::VectorXd::Zero(layout.local_dim()));
  cu.power_hat.assign(n, 0.0);
  cu.feasible_hat.assign(n, false);
  cu.tau.assign(n, 1);
  return cu;
}

CuOutcome cu_step(CuState& cu, std::vector<Message> arrivals, const AsyncConfig& async, const ici::IciLayout& layout,
                  double c) {
  for (auto& m : arrivals) cu.round[m.bs] = std::move(m);
  CuOutcome out;
  if (static_cast<int>(cu.round.size()) < async.S) return out;
  for (int n = 0; n < layout.cells(); ++n) {
    if (!cu.round.count(n) && cu.tau[static_cast<std::size_t>(n)] + 1 > async.tau) return out;
  }
  for (int n = 0; n < layout.cells(); ++n) {
    const auto un = static_cast<std::size_t>(n);
    const auto it = cu.round.find(n);
    if (it == cu.round.end()) {
      ++cu.tau[un];
      continue;
    }
    cu.tau[un] = 1;
    cu.v_hat[un] = it->second.v_n;
    cu.nu_hat[un] = it->second.nu;
    cu.power_hat[un] = it->second.power;
    cu.feasible_hat[un] = it->second.feasible;
    out.broadcast.push_back(n);
  }
  if (*std::max_element(cu.tau.begin(), cu.tau.end()) > async.tau) throw std::logic_error("delay bound violated");
  cu.v = sdbf::global_update(layout.stack(cu.v_hat), layout.stack(cu.nu_hat), c, layout);
  ++cu.clock;
  cu.round.clear();
  out.fired = true;
  return out;
}

namespace {

Message message_of(const BsAgent& a) {
  Message m;
  m.bs = a.state.n;
  m.v_n = a.state.v_n;
  m.nu = a.state.nu;
  m.power = a.last.power;
  m.feasible = a.last.feasible;
  return m;
}

void solve_and_queue(BsAgent& agent, const sdbf::LocalSolver& solve) {
  agent.last = solve(agent.state);
  agent.state.v_n = agent.last.v_n;
  agent.state.blocks = agent.last.blocks;
  agent.pending = message_of(agent);
}

}  // namespace

bool bs_step(BsAgent& agent, const std::optional<Eigen::VectorXd>& received, const sdbf::LocalSolver& solve,
             const ici::IciLayout& layout) {
  if (!received) return false;
  auto& s = agent.state;
  s.nu = sdbf::dual_update(s.nu, s.c, layout.w(s.n) * *received, s.v_n);
  s.v_tilde = *received;
  ++s.clock;
  solve_and_queue(agent, solve);
  return true;
}

metrics::ExperimentTrace run_async(const SystemConfig& cfg, const ici::IciLayout& layout,
                                   const sdbf::LocalSolver& solve, const sdbf::Finalizer& finalize,
                                   const AsyncConfig& async, const AsyncOptions& opt) {
  async.validate(layout.cells());
  const int n_cells = layout.cells();
  const auto un_cells = static_cast<std::size_t>(n_cells);
  const ArrivalModel arrivals_model(async.seed, async.p);
  metrics::ExperimentTrace trace;
  auto& sum = trace.summary;
  sum.participations.assign(un_cells, 0);

  std::vector<BsAgent> agents(un_cells);
  for (int n = 0; n < n_cells; ++n) {
    auto& a = agents[static_cast<std::size_t>(n)];
    a.state = sdbf::BsLocalState::initial(n, layout, opt.c);
    solve_and_queue(a, solve);
    if (!a.last.feasible) ++sum.local_infeasible;
  }
  CuState cu = CuState::initial(layout);
  // deliveries[n] = tick at which BS n receives the pending broadcast, or -1.
  std::vector<long> delivery_tick(un_cells, -1);
  std::vector<Eigen::VectorXd> delivery_value(un_cells);

  auto base_row = [&](long tick, const std::string& event, int bs) {
    metrics::TraceRow row;
    row.iteration = cu.clock;
    row.tick = tick;
    row.event = event;
    row.bs_id = bs;
    row.bs_power = cu.power_hat;
    row.total_power = sdbf::total_power(cu.power_hat, cfg);
    row.residual = sdbf::consensus_residual(cu.v, cu.v_hat, layout);
    row.feasible = std::all_of(cu.feasible_hat.begin(), cu.feasible_hat.end(), [](bool b) { return b; });
    row.tau = cu.tau;
    return row;
  };

  long tick = 0;
  for (; tick < async.max_ticks; ++tick) {
    for (int n = 0; n < n_cells; ++n) {
      const auto un = static_cast<std::size_t>(n);
      if (delivery_tick[un] != tick) continue;
      delivery_tick[un] = -1;
      auto& a = agents[un];
      bs_step(a, delivery_value[un], solve, layout);
      if (!a.last.feasible) ++sum.local_infeasible;
      trace.rows.push_back(base_row(tick, "bs_update", n));
    }
    std::vector<Message> arrived;
    for (int n = 0; n < n_cells; ++n) {
      auto& a = agents[static_cast<std::size_t>(n)];
      if (!a.pending || !arrivals_model.arrives(tick, n)) continue;
      arrived.push_back(std::move(*a.pending));
      a.pending.reset();
      trace.rows.push_back(base_row(tick, "arrival", n));
    }
    const bool had_arrivals = !arrived.empty();
    const auto out = cu_step(cu, std::move(arrived), async, layout, opt.c);
    if (!out.fired) {
      if (had_arrivals) trace.rows.push_back(base_row(tick, "waiting", -1));
      continue;
    }
    for (int n : out.broadcast) {
      const auto un = static_cast<std::size_t>(n);
      ++sum.participations[un];
      delivery_tick[un] = tick + async.delivery_delay;
      delivery_value[un] = cu.v;
    }
    const auto row = base_row(tick, "cu_update", -1);
    trace.rows.push_back(row);
    sum.iterations = cu.clock;
    sum.final_power = row.total_power;
    sum.final_residual = row.residual;
    if (row.residual <= opt.stop_tol) {
      std::vector<sdbf::LocalResult> latest;
      for (const auto& a : agents) latest.push_back(a.last);
      if (auto bf = finalize(cu.v, latest)) {
        sum.converged = true;
        sum.feasible = row.feasible;
        trace.beamformers = std::move(*bf);
        ++tick;
        break;
      }
    }
    if (cu.clock >= async.Q) {
      ++tick;
      break;
    }
  }
  sum.ticks = tick;
  sum.aborted = tick >= async.max_ticks && !sum.converged && cu.clock < async.Q;
  sum.local_iterations.clear();
  for (const auto& a : agents) sum.local_iterations.push_back(a.state.clock);
  if (!sum.converged) {
    std::vector<sdbf::LocalResult> latest;
    for (const auto& a : agents) latest.push_back(a.last);
    trace.beamformers = sdbf::principal_beamformers(cfg, latest);
  }
  trace.consensus = cu.v;
  return trace;
}

metrics::ExperimentTrace run_adbf(const ChannelSet& channels, const SystemConfig& cfg, const AsyncConfig& async,
                                  const AsyncOptions& opt) {
  cfg.validate();
  const ici::IciLayout layout(cfg.cells, cfg.users);
  return run_async(cfg, layout, sdbf::nominal_local_solver(channels, cfg, layout, opt.solver),
                   sdbf::principal_finalizer(channels, cfg), async, opt);
}

}  // namespace mccbf::adbf
