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
#include "mccbf/hybrid.hpp"
#include "mccbf/robust.hpp"
#include "mccbf/sync_dist.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace mccbf;

SystemConfig config(int antennas) {
  SystemConfig cfg;
  cfg.cells = 2;
  cfg.users = 2;
  cfg.antennas = antennas;
  cfg.sinr_target = 10.0;
  cfg.seed = 3;
  return cfg;
}

void BM_CentralizedSdp(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  const auto ch = sample_channels(cfg, cfg.seed);
  for (auto _ : state) benchmark::DoNotOptimize(centralized::solve_centralized(ch, cfg).sdp_objective);
}
BENCHMARK(BM_CentralizedSdp)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

// Full-dimension solve of the same problem, bypassing the channel-subspace reduction.
void BM_CentralizedSdpFullDimension(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  const auto ch = sample_channels(cfg, cfg.seed);
  const auto problem = centralized::build_sdr_problem(ch, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(conic::solve_sdp(problem).objective);
}
BENCHMARK(BM_CentralizedSdpFullDimension)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_LocalSubproblem(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  const auto ch = sample_channels(cfg, cfg.seed);
  const ici::IciLayout layout(cfg.cells, cfg.users);
  const auto st = sdbf::BsLocalState::initial(0, layout, 10.0);
  const auto solve = sdbf::nominal_local_solver(ch, cfg, layout);
  for (auto _ : state) benchmark::DoNotOptimize(solve(st).power);
}
BENCHMARK(BM_LocalSubproblem)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_RobustCentralized(benchmark::State& state) {
  const auto cfg = config(16);
  const auto ch = sample_channels(cfg, cfg.seed);
  const auto unc = robust::UncertaintyModel::spherical(0.1);
  for (auto _ : state) benchmark::DoNotOptimize(robust::solve_robust_centralized(ch, cfg, unc).objective);
}
BENCHMARK(BM_RobustCentralized)->Unit(benchmark::kMillisecond);

CMatrix hybrid_target(const SystemConfig& cfg) {
  const auto ch = sample_channels(cfg, cfg.seed);
  const auto sol = centralized::solve_centralized(ch, cfg);
  return hybrid::precoder_matrix(*sol.beamformers, 0);
}

void BM_BlDecompose(benchmark::State& state) {
  const auto cfg = config(16);
  const CMatrix g = hybrid_target(cfg);
  const CMatrix dict = build_dictionary(cfg.dict_size, cfg.antennas, cfg.spacing);
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::bl_decompose(g, dict, cfg.n_rf()).residual);
}
BENCHMARK(BM_BlDecompose)->Unit(benchmark::kMillisecond);

void BM_SompDecompose(benchmark::State& state) {
  const auto cfg = config(16);
  const CMatrix g = hybrid_target(cfg);
  const CMatrix dict = build_dictionary(cfg.dict_size, cfg.antennas, cfg.spacing);
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::somp_decompose(g, dict, cfg.n_rf()).residual);
}
BENCHMARK(BM_SompDecompose)->Unit(benchmark::kMicrosecond);

void BM_TrsMin(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(7);
  CMatrix x(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = complex_normal(rng);
  }
  const CMatrix a = (x + x.adjoint()) / 2.0;
  CVector b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = complex_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(robust::trs_min(a, b, 0.0, 0.5).value);
}
BENCHMARK(BM_TrsMin)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
