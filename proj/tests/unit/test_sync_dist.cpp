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

#include "mccbf/centralized.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace mccbf;
using namespace mccbf::sdbf;

SystemConfig cfg_of(int n, int k, int nt, double gamma = 10.0) {
  SystemConfig cfg;
  cfg.cells = n;
  cfg.users = k;
  cfg.antennas = nt;
  cfg.sinr_target = gamma;
  return cfg;
}

ChannelSet interference_free(const SystemConfig& cfg, std::uint64_t seed) {
  auto ch = sample_channels(cfg, seed);
  for (int m = 0; m < cfg.cells; ++m) {
    for (int n = 0; n < cfg.cells; ++n) {
      if (m == n) continue;
      for (int k = 0; k < cfg.users; ++k) ch.h(m, n, k).setZero();
    }
  }
  return ch;
}

TEST(LocalSubproblem, DecoupledSingleUser) {
  const auto cfg = cfg_of(2, 1, 4, 5.0);
  const auto ch = interference_free(cfg, 3);
  const ici::IciLayout layout(2, 1);
  for (int n = 0; n < 2; ++n) {
    const auto r = local_subproblem(BsLocalState::initial(n, layout, 1.0), ch, cfg, layout);
    ASSERT_TRUE(r.feasible);
    const double want = 5.0 / ch.h(n, n, 0).squaredNorm();
    EXPECT_NEAR(r.power, want, 1e-5 * want);
    EXPECT_LE(r.v_n.norm(), 1e-6);
  }
}

TEST(LocalSubproblem, PenaltyDrivesTracking) {
  const auto cfg = cfg_of(2, 2, 4, 2.0);
  const auto ch = sample_channels(cfg, 5);
  const ici::IciLayout layout(2, 2);
  Eigen::VectorXd vt(layout.global_dim());
  vt << 0.3, 0.1, 0.2, 0.4;
  double prev = std::numeric_limits<double>::infinity();
  double first = 0.0;
  for (double c : {1.0, 10.0, 100.0}) {
    auto s = BsLocalState::initial(0, layout, c);
    s.v_tilde = vt;
    const auto r = local_subproblem(s, ch, cfg, layout);
    ASSERT_TRUE(r.feasible);
    const double gap = (layout.w(0) * vt - r.v_n).norm();
    EXPECT_LT(gap, prev);
    if (c == 1.0) first = gap;
    prev = gap;
  }
  EXPECT_LT(prev, 0.25 * first);
}

TEST(LocalSubproblem, OutputSatisfiesLocalSet) {
  const auto cfg = cfg_of(3, 2, 4, 3.0);
  const auto ch = sample_channels(cfg, 6);
  const ici::IciLayout layout(3, 2);
  auto s = BsLocalState::initial(1, layout, 2.0);
  s.v_tilde = Eigen::VectorXd::Constant(layout.global_dim(), 0.2);
  s.nu = Eigen::VectorXd::LinSpaced(layout.local_dim(), -0.5, 0.5);
  const auto r = local_subproblem(s, ch, cfg, layout);
  ASSERT_TRUE(r.feasible);
  auto quad = [&](const CVector& h, const CMatrix& g) { return (h.adjoint() * g * h)(0, 0).real(); };
  for (int m = 0; m < 3; ++m) {
    if (m == 1) continue;
    for (int k = 0; k < 2; ++k) {
      double out = 0.0;
      for (const auto& g : r.blocks) out += quad(ch.h(1, m, k), g);
      EXPECT_NEAR(r.v_n(layout.local_out_index(1, m, k)), out, 1e-6 * (1.0 + out));
    }
  }
  for (int k = 0; k < 2; ++k) {
    const auto& h = ch.h(1, 1, k);
    double lhs = quad(h, r.blocks[static_cast<std::size_t>(k)]) / 3.0 - r.v_n(k);
    for (int i = 0; i < 2; ++i) {
      if (i != k) lhs -= quad(h, r.blocks[static_cast<std::size_t>(i)]);
    }
    EXPECT_GE(lhs, cfg.noise - 1e-6);
    EXPECT_GE(r.v_n(k), -1e-9);
  }
  for (const auto& g : r.blocks) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
    EXPECT_GE(es.eigenvalues()(0), -1e-7);
  }
}

TEST(DualUpdate, Examples) {
  const Eigen::VectorXd nu = Eigen::VectorXd::LinSpaced(3, 1.0, 3.0);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 0.5);
  EXPECT_EQ(dual_update(nu, 4.0, v, v), nu);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  EXPECT_EQ(dual_update(Eigen::VectorXd::Zero(3), 2.0, e1, Eigen::VectorXd::Zero(3)), 2.0 * e1);
  Eigen::VectorXd x = nu;
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  for (int t = 0; t < 7; ++t) x = dual_update(x, 0.5, r, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR((x - (nu + 7 * 0.5 * r)).norm(), 0.0, 1e-12);
}

TEST(GlobalUpdate, Examples) {
  const ici::IciLayout l(3, 2);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(l.global_dim(), 0.1, 1.2);
  std::vector<Eigen::VectorXd> locals;
  for (int n = 0; n < 3; ++n) locals.push_back(l.local_view(n, v));
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3 * l.local_dim());
  EXPECT_LE((global_update(l.stack(locals), zeros, 1.0, l) - v).norm(), 1e-10);
  EXPECT_EQ(global_update(zeros, zeros, 1.0, l).norm(), 0.0);

  const ici::IciLayout two(2, 1);
  Eigen::VectorXd vs(4), ns(4);
  vs << 1.0, 2.0, 3.0, 4.0;
  ns << 0.2, 0.4, 0.6, 0.8;
  // W = [[0,1],[1,0],[1,0],[0,1]], W^+ = W^T / 2, c = 2.
  const Eigen::VectorXd d = vs - ns / 2.0;
  Eigen::VectorXd want(2);
  want << 0.5 * (d(1) + d(2)), 0.5 * (d(0) + d(3));
  EXPECT_NEAR((global_update(vs, ns, 2.0, two) - want).norm(), 0.0, 1e-12);
}

TEST(RunAdmm, OneStepMatchesHandOracle) {
  const auto cfg = cfg_of(2, 1, 2);
  const ici::IciLayout l(2, 1);
  const std::vector<Eigen::VectorXd> fixed = {Eigen::Vector2d(0.3, 0.7), Eigen::Vector2d(0.5, 0.1)};
  LocalSolver solve = [&](const BsLocalState& s) {
    LocalResult r;
    r.v_n = fixed[static_cast<std::size_t>(s.n)];
    r.power = 1.0 + s.n;
    r.feasible = true;
    return r;
  };
  Finalizer never = [](const Eigen::VectorXd&, const std::vector<LocalResult>&) {
    return std::optional<FdBeamformers>();
  };
  AdmmOptions opt;
  opt.c = 2.0;
  opt.max_outer = 1;
  const auto tr = run_admm(cfg, l, solve, never, opt);
  // v = W^T stack / 2 with zero duals.
  const Eigen::Vector2d v(0.5 * (0.7 + 0.5), 0.5 * (0.3 + 0.1));
  EXPECT_NEAR((tr.consensus - v).norm(), 0.0, 1e-12);
  const double r1 = (Eigen::Vector2d(v(1), v(0)) - fixed[0]).norm();
  const double r2 = (v - fixed[1]).norm();
  ASSERT_EQ(tr.rows.size(), 1u);
  EXPECT_NEAR(tr.rows[0].residual, std::max(r1, r2), 1e-12);
  EXPECT_DOUBLE_EQ(tr.rows[0].total_power, 3.0);
  EXPECT_FALSE(tr.summary.converged);
}

TEST(RunSdbf, InterferenceFreeConvergesImmediately) {
  const auto cfg = cfg_of(2, 2, 4, 5.0);
  const auto ch = interference_free(cfg, 9);
  const auto tr = run_sdbf(ch, cfg);
  EXPECT_TRUE(tr.summary.converged);
  EXPECT_LE(tr.summary.iterations, 3);
  const auto cen = centralized::solve_centralized(ch, cfg);
  ASSERT_EQ(cen.outcome, centralized::Outcome::Feasible);
  EXPECT_NEAR(tr.summary.final_power, cen.sdp_objective, 1e-4 * cen.sdp_objective);
}

TEST(RunSdbf, ConvergesToCentralizedOptimum) {
  const auto cfg = cfg_of(2, 2, 8, 10.0);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ch = sample_channels(cfg, seed);
    const auto cen = centralized::solve_centralized(ch, cfg);
    if (cen.outcome != centralized::Outcome::Feasible) continue;
    AdmmOptions opt;
    opt.c = 10.0;
    const auto tr = run_sdbf(ch, cfg, opt);
    if (!tr.summary.converged) continue;
    ++checked;
    EXPECT_TRUE(tr.summary.feasible);
    EXPECT_LE(tr.summary.final_residual, opt.stop_tol);
    EXPECT_GE(tr.rows.front().residual, 10.0 * tr.rows.back().residual);
    EXPECT_NEAR(tr.summary.final_power, cen.sdp_objective, 0.02 * cen.sdp_objective);
    for (int n = 0; n < 2; ++n) {
      for (int k = 0; k < 2; ++k) EXPECT_GE(tr.beamformers.sinr(n, k), 10.0 * (1.0 - 1e-2));
    }
  }
  EXPECT_GE(checked, 2);
}

}  // namespace
