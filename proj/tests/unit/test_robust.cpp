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

#include "mccbf/robust.hpp"

#include "mccbf/metrics.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace {

using namespace mccbf;
using namespace mccbf::robust;

SystemConfig cfg_of(int n, int k, int nt, double gamma = 10.0) {
  SystemConfig cfg;
  cfg.cells = n;
  cfg.users = k;
  cfg.antennas = nt;
  cfg.sinr_target = gamma;
  return cfg;
}

CVector random_vec(Rng& rng, int n) {
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = complex_normal(rng);
  return v;
}

CMatrix random_psd(Rng& rng, int n, int rank) {
  CMatrix a = CMatrix::Zero(n, n);
  for (int r = 0; r < rank; ++r) {
    const CVector g = random_vec(rng, n);
    a += g * g.adjoint();
  }
  return a;
}

CMatrix random_hermitian(Rng& rng, int n) {
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = complex_normal(rng);
  }
  return 0.5 * (a + a.adjoint());
}

double quad(const CMatrix& a, const CVector& b, double c0, const CVector& x) {
  return std::real(x.dot(a * x)) + 2.0 * std::real(b.dot(x)) + c0;
}

// Multi-start projected gradient descent, a local-search oracle for the TRS.
double pgd_min(const CMatrix& a, const CVector& b, double c0, double r, Rng& rng) {
  double best = c0;
  const double step = 0.25 / std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
  for (int s = 0; s < 40; ++s) {
    CVector x = ball_sample(static_cast<int>(a.rows()), r, rng);
    for (int it = 0; it < 3000; ++it) {
      x -= step * 2.0 * (a * x + b);
      const double nx = x.norm();
      if (nx > r) x *= r / nx;
    }
    best = std::min(best, quad(a, b, c0, x));
  }
  return best;
}

// Dense evaluation of constant + sum(w Q^H X Q) + sum(coef s).
CMatrix eval_lmi(const conic::LmiConstraint& l, const std::vector<CMatrix>& x, const std::vector<double>& s) {
  CMatrix m = l.constant;
  for (const auto& t : l.blocks) m += t.weight * t.map.adjoint() * x[t.block] * t.map;
  for (const auto& t : l.scalars) m += s[t.scalar] * t.coef;
  return m;
}

double min_eig(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues()(0);
}

LinkShape ball(int nt, double eps) {
  LinkShape s;
  s.p = CMatrix::Identity(nt, nt);
  s.q = eps * eps;
  return s;
}

TEST(Trs, IsotropicWorstCase) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const CVector h = random_vec(rng, 4);
    const double eps = 0.05 + 0.5 * unit_uniform(rng());
    const double expect = std::pow(h.norm() + eps, 2);
    EXPECT_NEAR(worst_case_quadratic(h, CMatrix::Identity(4, 4), eps), expect, 1e-9 * expect);
  }
}

TEST(Trs, ZeroRadiusIsNominal) {
  Rng rng(4);
  const CVector h = random_vec(rng, 5);
  const CMatrix a = random_psd(rng, 5, 2);
  EXPECT_DOUBLE_EQ(worst_case_quadratic(h, a, 0.0), std::real(h.dot(a * h)));
}

TEST(Trs, SamplingBoundsWorstCase) {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const int nt = 4;
    const CVector h = random_vec(rng, nt);
    const CMatrix a = random_psd(rng, nt, 1 + t % 3);
    const double eps = 0.3;
    const double oracle = worst_case_quadratic(h, a, eps);
    double sampled = -1.0;
    for (int s = 0; s < 10000; ++s) {
      const CVector x = h + ball_sample(nt, eps, rng);
      sampled = std::max(sampled, std::real(x.dot(a * x)));
    }
    const double scale = a.norm() * std::pow(h.norm() + eps, 2);
    EXPECT_GE(oracle, sampled - 1e-9 * scale);
    // Local search from many starts must not beat the oracle.
    const double local = -pgd_min(-a, -a * h, -std::real(h.dot(a * h)), eps, rng);
    EXPECT_LE(local, oracle + 1e-6 * scale);
    EXPECT_NEAR(local, oracle, 1e-6 * scale);
  }
}

TEST(Trs, MinimizerIsAttainedAndFeasible) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const CMatrix a = random_hermitian(rng, 5);
    const CVector b = random_vec(rng, 5);
    const double r = 0.1 + 2.0 * unit_uniform(rng());
    const auto res = trs_min(a, b, 0.7, r);
    EXPECT_LE(res.xi.norm(), r * (1.0 + 1e-9));
    EXPECT_NEAR(quad(a, b, 0.7, res.xi), res.value, 1e-9 * (1.0 + std::abs(res.value)));
    EXPECT_LE(res.value, pgd_min(a, b, 0.7, r, rng) + 1e-7 * (1.0 + std::abs(res.value)));
  }
}

TEST(Trs, HardCase) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = -1.0;
  a(1, 1) = 2.0;
  CVector b = CVector::Zero(2);
  b(1) = 0.3;
  const auto res = trs_min(a, b, 0.0, 1.0);
  // mu = 1: x2 = -0.1, |x1|^2 = 0.99.
  EXPECT_NEAR(res.value, -1.03, 1e-12);
  EXPECT_NEAR(res.xi.norm(), 1.0, 1e-12);
}

TEST(Trs, InteriorCase) {
  CMatrix a = CMatrix::Identity(3, 3) * 2.0;
  CVector b = CVector::Zero(3);
  b(0) = 1.0;
  const auto res = trs_min(a, b, 0.0, 10.0);
  EXPECT_NEAR(res.value, -0.5, 1e-12);
  EXPECT_NEAR(std::real(res.xi(0)), -0.5, 1e-12);
}

TEST(Phi, ZeroBlocksViolate) {
  const int nt = 3;
  Rng rng(7);
  const CVector h = random_vec(rng, nt);
  const auto l = build_phi({0, 1}, 0, 10.0, {0}, 1.0, 1, h, ball(nt, 0.1));
  const std::vector<CMatrix> x(2, CMatrix::Zero(nt, nt));
  const CMatrix m = eval_lmi(l, x, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(std::real(m(nt, nt)), -1.0);
  EXPECT_LT(min_eig(m), 0.0);
}

TEST(Phi, SymbolicExpansion) {
  const int nt = 2;
  Rng rng(8);
  const CVector h = random_vec(rng, nt);
  std::vector<CMatrix> g = {random_psd(rng, nt, 1), random_psd(rng, nt, 2), random_psd(rng, nt, 1)};
  const std::vector<double> s = {0.3, 0.7, 0.25};
  const double gamma = 4.0, sigma2 = 1.5, eps = 0.2;
  const auto l = build_phi({0, 1, 2}, 1, gamma, {0, 1}, sigma2, 2, h, ball(nt, eps));
  const CMatrix m = g[1] / gamma - g[0] - g[2];
  CMatrix expect(nt + 1, nt + 1);
  expect.topLeftCorner(nt, nt) = m + s[2] * CMatrix::Identity(nt, nt);
  expect.topRightCorner(nt, 1) = m * h;
  expect.bottomLeftCorner(1, nt) = h.adjoint() * m;
  expect(nt, nt) = h.dot(m * h) - sigma2 - s[0] - s[1] - s[2] * eps * eps;
  EXPECT_LE((eval_lmi(l, g, s) - expect).norm(), 1e-12);
}

TEST(Phi, RejectsShapeMismatch) {
  Rng rng(9);
  EXPECT_THROW(build_phi({0}, 0, 1.0, {}, 1.0, 0, random_vec(rng, 3), ball(2, 0.1)), conic::DimensionMismatch);
  EXPECT_THROW(build_psi({0}, 0, 0.0, 1, random_vec(rng, 3), ball(4, 0.1)), conic::DimensionMismatch);
}

TEST(Psi, ZeroBlocksHold) {
  const int nt = 3;
  Rng rng(10);
  const auto l = build_psi({0, 1}, 0, 0.0, 1, random_vec(rng, nt), ball(nt, 0.1));
  const CMatrix m = eval_lmi(l, std::vector<CMatrix>(2, CMatrix::Zero(nt, nt)), {0.0, 0.0});
  EXPECT_EQ(m.norm(), 0.0);
}

TEST(Psi, SymbolicExpansion) {
  const int nt = 2;
  Rng rng(11);
  const CVector h = random_vec(rng, nt);
  std::vector<CMatrix> g = {random_psd(rng, nt, 1), random_psd(rng, nt, 1)};
  const std::vector<double> s = {2.5, 0.4};
  const double eps = 0.3;
  const auto l = build_psi({0, 1}, 0, 0.0, 1, h, ball(nt, eps));
  const CMatrix a = g[0] + g[1];
  CMatrix expect(nt + 1, nt + 1);
  expect.topLeftCorner(nt, nt) = -a + s[1] * CMatrix::Identity(nt, nt);
  expect.topRightCorner(nt, 1) = -a * h;
  expect.bottomLeftCorner(1, nt) = -h.adjoint() * a;
  expect(nt, nt) = s[0] - h.dot(a * h) - s[1] * eps * eps;
  EXPECT_LE((eval_lmi(l, g, s) - expect).norm(), 1e-12);
  // Fixed-budget form puts v in the constant.
  const auto f = build_psi({0, 1}, std::nullopt, s[0], 0, h, ball(nt, eps));
  EXPECT_LE((eval_lmi(f, g, {s[1]}) - expect).norm(), 1e-12);
}

// max over mu >= 0 of the smallest eigenvalue; concave in mu.
double best_min_eig(const conic::LmiConstraint& l, const std::vector<CMatrix>& g, double v) {
  double lo = 0.0, hi = 1e3;
  auto f = [&](double mu) { return min_eig(eval_lmi(l, g, {v, mu})); };
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (f(a) < f(b)) {
      lo = a;
    } else {
      hi = b;
    }
  }
  return f(0.5 * (lo + hi));
}

TEST(Psi, TightAgainstWorstCase) {
  const int nt = 3;
  Rng rng(12);
  for (int t = 0; t < 5; ++t) {
    const CVector h = random_vec(rng, nt);
    std::vector<CMatrix> g = {random_psd(rng, nt, 1), random_psd(rng, nt, 1)};
    const double eps = 0.25;
    const double wc = worst_case_quadratic(h, g[0] + g[1], eps);
    const auto l = build_psi({0, 1}, 0, 0.0, 1, h, ball(nt, eps));
    EXPECT_LT(best_min_eig(l, g, wc * (1.0 - 1e-3)), 0.0);
    EXPECT_GE(best_min_eig(l, g, wc * (1.0 + 1e-3)), -1e-9);
  }
}

TEST(Phi, SmallRadiusMatchesNominalConstraint) {
  // For fixed blocks the LMI holds iff sigma2 is below the worst-case numerator,
  // which tends to the nominal value as eps shrinks.
  const int nt = 3;
  Rng rng(13);
  const CVector h = random_vec(rng, nt);
  std::vector<CMatrix> g = {random_psd(rng, nt, 1) * 5.0, random_psd(rng, nt, 1) * 0.01};
  const double gamma = 2.0;
  const CMatrix m = g[0] / gamma - g[1];
  const double nominal = std::real(h.dot(m * h));
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const double boundary = best_case_quadratic(h, m, ball(nt, eps));
    const double gap = nominal - boundary;
    EXPECT_GE(gap, 0.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
    for (double rel : {1.0 - 1e-3, 1.0 + 1e-3}) {
      const auto l = build_phi({0, 1}, 0, gamma, {}, rel * boundary, 0, h, ball(nt, eps));
      double lo = 0.0, hi = 1e6;
      auto f = [&](double mu) { return min_eig(eval_lmi(l, g, {mu})); };
      for (int it = 0; it < 300; ++it) {
        const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
        if (f(a) < f(b)) {
          lo = a;
        } else {
          hi = b;
        }
      }
      EXPECT_EQ(f(0.5 * (lo + hi)) >= -1e-9, rel < 1.0) << "eps " << eps;
    }
  }
  EXPECT_LT(prev_gap, 1e-3 * nominal);
}

TEST(UncertaintyModel, Validation) {
  const auto cfg = cfg_of(2, 1, 4);
  const auto ch = sample_channels(cfg, 1);
  EXPECT_THROW(UncertaintyModel::spherical(-0.1).validate(ch), InvalidDimensions);
  UncertaintyModel e;
  e.kind = UncertaintyModel::Kind::Ellipsoidal;
  EXPECT_THROW(e.validate(ch), InvalidDimensions);
  e.r_link.assign(4, CMatrix::Identity(4, 4));
  EXPECT_NO_THROW(e.validate(ch));
  e.r_link[2](0, 0) = -1.0;
  EXPECT_THROW(e.validate(ch), InvalidDimensions);
}

TEST(RobustCentralized, TinyRadiusMatchesNominal) {
  const auto cfg = cfg_of(2, 2, 4, 3.0);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ch = sample_channels(cfg, seed);
    const auto nom = centralized::solve_centralized(ch, cfg);
    if (nom.outcome != centralized::Outcome::Feasible) continue;
    const auto rob = solve_robust_centralized(ch, cfg, UncertaintyModel::spherical(1e-6));
    ASSERT_EQ(rob.outcome, centralized::Outcome::Feasible);
    EXPECT_NEAR(rob.objective, nom.sdp_objective, 1e-3 * nom.sdp_objective);
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

TEST(RobustCentralized, ZeroRadiusRoutesToNominal) {
  const auto cfg = cfg_of(2, 2, 4, 3.0);
  const auto ch = sample_channels(cfg, 2);
  const auto p = build_robust_problem(ch, cfg, UncertaintyModel::spherical(0.0));
  EXPECT_TRUE(p.lmis().empty());
  EXPECT_EQ(p.constraints().size(), 4u + 4u);
  const auto q = build_robust_problem(ch, cfg, UncertaintyModel::spherical(0.1));
  EXPECT_EQ(q.lmis().size(), 8u);
  EXPECT_EQ(q.scalars().size(), 4u + 8u);
}

TEST(RobustCentralized, SoundAndCostlier) {
  const auto cfg = cfg_of(2, 2, 6, 3.0);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto ch = sample_channels(cfg, seed);
    const auto nom = centralized::solve_centralized(ch, cfg);
    for (double eps : {0.1, 0.3}) {
      const auto unc = UncertaintyModel::spherical(eps);
      const auto rob = solve_robust_centralized(ch, cfg, unc);
      if (rob.outcome != centralized::Outcome::Feasible) continue;
      ++checked;
      ASSERT_EQ(nom.outcome, centralized::Outcome::Feasible);
      EXPECT_GE(rob.objective, nom.sdp_objective * (1.0 - 1e-6));
      for (double l : rob.multipliers) EXPECT_GE(l, -1e-8);
      EXPECT_GE(rob.margins.minCoeff(), -1e-4);
      EXPECT_TRUE(rob.margins.allFinite());
      Rng rng(derive_seed(seed, {77}));
      EXPECT_GE(sampled_min_margin(*rob.beamformers, ch, unc, cfg, 10000, rng), -1e-6);
      // The verified margin lower-bounds every sampled one.
      Rng rng2(derive_seed(seed, {78}));
      EXPECT_LE(rob.margins.minCoeff(), sampled_min_margin(*rob.beamformers, ch, unc, cfg, 200, rng2) + 1e-9);
    }
  }
  EXPECT_GE(checked, 4);
}

TEST(RobustCentralized, ObjectiveNondecreasingInRadius) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 9);
  double prev = 0.0;
  for (double eps : {0.0, 0.05, 0.1, 0.2}) {
    const auto rob = solve_robust_centralized(ch, cfg, UncertaintyModel::spherical(eps));
    if (rob.outcome != centralized::Outcome::Feasible) break;
    EXPECT_GE(rob.objective, prev * (1.0 - 1e-6));
    prev = rob.objective;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(RobustCentralized, EllipsoidMatchesSphere) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 3);
  const double eps = 0.2;
  UncertaintyModel e;
  e.kind = UncertaintyModel::Kind::Ellipsoidal;
  e.r_link.assign(4, CMatrix::Identity(4, 4) / (eps * eps));
  const auto a = solve_robust_centralized(ch, cfg, UncertaintyModel::spherical(eps));
  const auto b = solve_robust_centralized(ch, cfg, e);
  ASSERT_EQ(a.outcome, centralized::Outcome::Feasible);
  ASSERT_EQ(b.outcome, centralized::Outcome::Feasible);
  EXPECT_NEAR(a.objective, b.objective, 1e-5 * a.objective);
  EXPECT_LE((a.margins - b.margins).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + a.margins.cwiseAbs().maxCoeff()));
}

TEST(VerifyRobustSinr, ZeroRadiusIsNominalMargin) {
  const auto cfg = cfg_of(2, 2, 4, 3.0);
  const auto ch = sample_channels(cfg, 5);
  Rng rng(1);
  FdBeamformers bf(2, 2, 4);
  for (auto& g : bf.g) g = random_vec(rng, 4);
  const auto sinr = metrics::sinr(bf, ch, cfg);
  const auto m = verify_robust_sinr(bf, ch, UncertaintyModel::spherical(0.0), cfg);
  for (int n = 0; n < 2; ++n) {
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(m(n, k), sinr(n, k) - 3.0, 1e-9 * (1.0 + sinr(n, k)));
  }
}

TEST(FeasibilityRecovery, ZeroBudgetIsInfeasible) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 2);
  const ici::IciLayout layout(2, 1);
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.global_dim());
  const auto unc = UncertaintyModel::spherical(0.1);
  bool any_infeasible = false;
  for (int n = 0; n < 2; ++n) any_infeasible |= !feasibility_recovery(n, v, ch, cfg, layout, unc).feasible;
  EXPECT_TRUE(any_infeasible);
}

TEST(RobustDistributed, ZeroRadiusMatchesNominalSdbf) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 4);
  sdbf::AdmmOptions opt;
  opt.c = 10.0;
  const auto nom = sdbf::run_sdbf(ch, cfg, opt);
  const auto rob = run_robust_sdbf(ch, cfg, UncertaintyModel::spherical(0.0), opt);
  ASSERT_TRUE(nom.summary.converged);
  ASSERT_TRUE(rob.summary.converged);
  EXPECT_NEAR(rob.summary.final_power, nom.summary.final_power, 5e-3 * nom.summary.final_power);
}

TEST(RobustDistributed, ConvergedConsensusRecoversAndVerifies) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 4);
  const auto unc = UncertaintyModel::spherical(0.1);
  sdbf::AdmmOptions opt;
  opt.c = 10.0;
  const auto tr = run_robust_sdbf(ch, cfg, unc, opt);
  ASSERT_TRUE(tr.summary.converged);
  EXPECT_TRUE(tr.summary.feasible);
  const ici::IciLayout layout(2, 1);
  for (int n = 0; n < 2; ++n) EXPECT_TRUE(feasibility_recovery(n, tr.consensus, ch, cfg, layout, unc).feasible);
  EXPECT_GE(verify_robust_sinr(tr.beamformers, ch, unc, cfg).minCoeff(), -1e-4);
  const auto cen = solve_robust_centralized(ch, cfg, unc);
  ASSERT_EQ(cen.outcome, centralized::Outcome::Feasible);
  EXPECT_NEAR(tr.summary.final_power, cen.objective, 0.02 * cen.objective);
}

TEST(RobustDistributed, AsyncCostsAtLeastNominal) {
  const auto cfg = cfg_of(2, 1, 4, 3.0);
  const auto ch = sample_channels(cfg, 4);
  adbf::AsyncConfig async;
  async.seed = 3;
  adbf::AsyncOptions opt;
  opt.c = 10.0;
  const auto nom = adbf::run_adbf(ch, cfg, async, opt);
  const auto rob = run_robust_adbf(ch, cfg, UncertaintyModel::spherical(0.1), async, opt);
  ASSERT_TRUE(nom.summary.converged);
  ASSERT_TRUE(rob.summary.converged);
  EXPECT_GE(rob.summary.final_power, nom.summary.final_power * (1.0 - 1e-3));
}

}  // namespace
