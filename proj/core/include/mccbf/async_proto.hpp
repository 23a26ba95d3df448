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

// Asynchronous ADMM beamforming: discrete-tick simulation of the CU and BS agents.

#pragma once

#include "mccbf/sync_dist.hpp"

#include <map>
#include <optional>
#include <vector>

namespace mccbf::adbf {

struct AsyncConfig {
  int S = 1;       // minimum responses per CU update
  int tau = 4;     // bounded delay
  double p = 0.6;  // per-tick arrival probability of a pending BS message
  int Q = 100;     // CU iteration budget
  std::uint64_t seed = 1;
  long max_ticks = 200000;
  int delivery_delay = 1;  // ticks between a CU broadcast and its delivery

  // Throws InvalidDimensions.
  void validate(int cells) const;
};

class ArrivalModel {
 public:
  ArrivalModel(std::uint64_t seed, double p) : seed_(seed), p_(p) {}
  bool arrives(long tick, int bs) const;

 private:
  std::uint64_t seed_;
  double p_;
};

struct Message {
  int bs = 0;
  Eigen::VectorXd v_n;
  Eigen::VectorXd nu;  // dual used in the solve that produced v_n
  double power = 0.0;
  bool feasible = false;
};

struct CuState {
  Eigen::VectorXd v;
  std::vector<Eigen::VectorXd> v_hat;
  std::vector<Eigen::VectorXd> nu_hat;
  std::vector<double> power_hat;
  std::vector<bool> feasible_hat;
  std::vector<int> tau;  // rounds since the last update from each BS, starting at 1
  int clock = 0;
  std::map<int, Message> round;  // arrivals not yet consumed

  static CuState initial(const ici::IciLayout& layout);
};

struct CuOutcome {
  bool fired = false;
  std::vector<int> broadcast;
};

// Adds the arrivals to the current round and fires when at least S BSs have
// reported and no absent BS would exceed the delay bound.
CuOutcome cu_step(CuState& cu, std::vector<Message> arrivals, const AsyncConfig& async, const ici::IciLayout& layout,
                  double c);

struct BsAgent {
  sdbf::BsLocalState state;
  std::optional<Message> pending;  // solved, not yet received by the CU
  sdbf::LocalResult last;
};

// With a delivered global v: dual update, advance the clock, re-solve and queue
// a message. Without one the agent is left unchanged. Returns true if a new
// message was queued.
bool bs_step(BsAgent& agent, const std::optional<Eigen::VectorXd>& received, const sdbf::LocalSolver& solve,
             const ici::IciLayout& layout);

struct AsyncOptions {
  double c = 1.0;
  double stop_tol = 1e-4;
  conic::SolverOptions solver;
};

metrics::ExperimentTrace run_async(const SystemConfig& cfg, const ici::IciLayout& layout,
                                   const sdbf::LocalSolver& solve, const sdbf::Finalizer& finalize,
                                   const AsyncConfig& async, const AsyncOptions& opt);

metrics::ExperimentTrace run_adbf(const ChannelSet& channels, const SystemConfig& cfg, const AsyncConfig& async,
                                  const AsyncOptions& opt = {});

}  // namespace mccbf::adbf
