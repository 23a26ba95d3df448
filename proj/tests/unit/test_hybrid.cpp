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

#include "mccbf/hybrid.hpp"

#include "mccbf/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace mccbf;
using namespace mccbf::hybrid;

CMatrix random_mat(Rng& rng, int r, int c) {
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = complex_normal(rng);
  return m;
}

TEST(BlPosterior, TinyPriorShrinksMean) {
  Rng rng(1);
  const CMatrix f = build_dictionary(8, 4);
  const CMatrix g = random_mat(rng, 4, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (double floor : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const auto p = bl_posterior(Eigen::VectorXd::Constant(8, floor), 1e-3, f, g);
    EXPECT_LT(p.mean.cwiseAbs().maxCoeff(), prev);
    prev = p.mean.cwiseAbs().maxCoeff();
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(BlPosterior, IdentityDictionary) {
  Rng rng(2);
  const CMatrix g = random_mat(rng, 3, 2);
  const auto p = bl_posterior(Eigen::VectorXd::Ones(3), 1.0, CMatrix::Identity(3, 3), g);
  EXPECT_NEAR((p.cov - 0.5 * CMatrix::Identity(3, 3)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((p.mean - 0.5 * g).norm(), 0.0, 1e-14);
}

TEST(BlPosterior, MatchesDenseFormula) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix f = random_mat(rng, 3, 4);
    const CMatrix g = random_mat(rng, 3, 2);
    Eigen::VectorXd gam(4);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < 4; ++i) gam(i) = u(rng);
    const double s2 = 0.3;
    const auto p = bl_posterior(gam, s2, f, g);
    CMatrix prec = f.adjoint() * f / s2;
    prec.diagonal() += gam.cwiseInverse().cast<std::complex<double>>();
    const CMatrix omega = prec.inverse();
    const CMatrix mean = omega * f.adjoint() * g / s2;
    EXPECT_LE((p.cov - omega).norm(), 1e-10 * omega.norm());
    EXPECT_LE((p.mean - mean).norm(), 1e-10 * mean.norm());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(p.cov);
    EXPECT_GE(es.eigenvalues()(0), -1e-12);
  }
}

TEST(BlPosterior, RejectsSingularSystem) {
  const CMatrix f = CMatrix::Zero(3, 4);
  EXPECT_THROW(bl_posterior(Eigen::VectorXd::Ones(4), 0.0, f, CMatrix::Ones(3, 1)), SingularCovariance);
}

TEST(BlMStep, Examples) {
  CMatrix mean = CMatrix::Zero(2, 2);
  CMatrix cov = CMatrix::Zero(2, 2);
  cov(0, 0) = 0.3;
  mean(1, 0) = 1.0;
  mean(1, 1) = 1.0;
  const auto g = bl_m_step(mean, cov, 2);
  EXPECT_DOUBLE_EQ(g(0), 0.3);
  EXPECT_DOUBLE_EQ(g(1), 1.0);
  EXPECT_GT(bl_m_step(CMatrix::Zero(1, 1), CMatrix::Zero(1, 1), 1)(0), 0.0);
}

TEST(BlMStep, StationaryPointOfExpectedLogPrior) {
  Rng rng(4);
  const CMatrix f = build_dictionary(8, 4);
  const CMatrix g = random_mat(rng, 4, 3);
  Eigen::VectorXd gam = Eigen::VectorXd::Ones(8);
  const auto p = bl_posterior(gam, 1e-2, f, g);
  const auto next = bl_m_step(p.mean, p.cov, 3);
  // Per-coordinate objective: -K log(g) - (||S_i||^2 + K Omega_ii) / g.
  for (int i = 0; i < 8; ++i) {
    const double a = p.mean.row(i).squaredNorm() + 3.0 * p.cov(i, i).real();
    auto obj = [&](double x) { return -3.0 * std::log(x) - a / x; };
    const double h = 1e-6 * next(i);
    const double grad = (obj(next(i) + h) - obj(next(i) - h)) / (2.0 * h);
    EXPECT_NEAR(grad * next(i), 0.0, 1e-6);
  }
}

TEST(BlDecompose, PlantedSingleColumn) {
  const CMatrix f = build_dictionary(64, 16);
  const CMatrix g = f.col(1);
  const auto h = bl_decompose(g, f, 1);
  ASSERT_EQ(h.support.size(), 1u);
  EXPECT_EQ(h.support[0], 1);
  EXPECT_LE(h.residual, 1e-6);
  for (Eigen::Index i = 0; i < h.g_rf.size(); ++i) EXPECT_NEAR(std::abs(h.g_rf(i)), 0.25, 1e-15);
}

TEST(BlDecompose, PlantedSeparatedSupport) {
  const CMatrix f = build_dictionary(64, 16);
  Rng rng(5);
  std::uniform_int_distribution<int> pick(0, 63);
  for (int trial = 0; trial < 50; ++trial) {
    int a = pick(rng), b = pick(rng);
    while (std::abs(a - b) < 8 || std::abs(a - b) > 56) b = pick(rng);
    CMatrix ff(16, 2);
    ff << f.col(a), f.col(b);
    const CMatrix g = ff * random_mat(rng, 2, 2);
    const auto h = bl_decompose(g, f, 2);
    std::vector<int> s = h.support;
    std::sort(s.begin(), s.end());
    EXPECT_EQ(s, (std::vector<int>{std::min(a, b), std::max(a, b)}));
    EXPECT_LE(h.residual, 1e-4 * g.norm());
  }
}

TEST(BlDecompose, ResidualShrinksWithMoreChains) {
  const CMatrix f = build_dictionary(16, 8);
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix g = random_mat(rng, 8, 2);
    const auto one = bl_decompose(g, f, 1);
    const auto all = bl_decompose(g, f, 16);
    EXPECT_LE(all.residual, one.residual + 1e-12);
  }
}

TEST(BlDecompose, HyperparameterChangeContracts) {
  const CMatrix f = build_dictionary(64, 16);
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const CMatrix g = random_mat(rng, 16, 2);
    const CMatrix target = g / g.norm();
    Eigen::VectorXd gam = Eigen::VectorXd::Ones(64);
    double first = 0.0, last = 0.0;
    for (int j = 0; j < 50; ++j) {
      const auto p = bl_posterior(gam, 1e-3, f, target);
      const auto next = bl_m_step(p.mean, p.cov, 2);
      last = (next - gam).cwiseAbs().maxCoeff();
      if (j == 0) first = last;
      gam = next;
    }
    EXPECT_LT(last, 1e-2 * first);
    const auto h = bl_decompose(g, f, 2);
    EXPECT_EQ(h.converged, h.iterations < 50);
    EXPECT_LE(h.iterations, 50);
  }
}

TEST(Somp, PlantedSingleColumnAndCompleteBasis) {
  const CMatrix f = build_dictionary(64, 16);
  const auto h = somp_decompose(f.col(9) * 2.0, f, 1);
  EXPECT_EQ(h.support[0], 9);
  EXPECT_LE(h.residual, 1e-10);
  const CMatrix basis = build_dictionary(8, 8);
  Rng rng(8);
  const auto full = somp_decompose(random_mat(rng, 8, 3), basis, 8);
  EXPECT_LE(full.residual, 1e-10);
}

TEST(Somp, BlNoWorseOnCoherentPlantedSupports) {
  const CMatrix f = build_dictionary(64, 16);
  Rng rng(9);
  std::uniform_int_distribution<int> pick(0, 61);
  int wins = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const int a = pick(rng);
    CMatrix ff(16, 2);
    ff << f.col(a), f.col(a + 2);
    const CMatrix g = ff * random_mat(rng, 2, 2);
    const double bl = bl_decompose(g, f, 2).residual;
    const double somp = somp_decompose(g, f, 2).residual;
    if (bl <= somp + 1e-9 * g.norm()) ++wins;
  }
  EXPECT_GE(wins, static_cast<int>(0.6 * trials));
}

TEST(EvaluateHybrid, CompleteBasisReproducesDigital) {
  SystemConfig cfg;
  cfg.antennas = 8;
  const auto ch = sample_channels(cfg, 3);
  Rng rng(10);
  FdBeamformers fd(2, 2, 8);
  for (auto& g : fd.g) g = random_mat(rng, 8, 1);
  const CMatrix basis = build_dictionary(8, 8);
  std::vector<HybridPrecoder> per_bs;
  for (int n = 0; n < 2; ++n) per_bs.push_back(somp_decompose(precoder_matrix(fd, n), basis, 8));
  const auto e = evaluate_hybrid(ch, per_bs, cfg);
  const auto want = metrics::sinr(fd, ch, cfg);
  EXPECT_LE((e.sinr - want).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + want.cwiseAbs().maxCoeff()));
  EXPECT_NEAR(e.sum_rate, metrics::sum_rate(want), 1e-9);
}

TEST(EvaluateHybrid, ZeroBasebandAndRecomputation) {
  SystemConfig cfg;
  cfg.antennas = 8;
  const auto ch = sample_channels(cfg, 4);
  const CMatrix f = build_dictionary(64, 8);
  Rng rng(11);
  std::vector<HybridPrecoder> per_bs(2);
  for (auto& h : per_bs) {
    h.support = {3, 40};
    h.g_rf.resize(8, 2);
    h.g_rf << f.col(3), f.col(40);
    h.g_bb = CMatrix::Zero(2, 2);
  }
  auto e = evaluate_hybrid(ch, per_bs, cfg);
  EXPECT_EQ(e.sum_rate, 0.0);
  for (auto& h : per_bs) h.g_bb = random_mat(rng, 2, 2);
  e = evaluate_hybrid(ch, per_bs, cfg);
  double rate = 0.0;
  for (int n = 0; n < 2; ++n) {
    for (int k = 0; k < 2; ++k) {
      double sig = 0.0, den = cfg.noise;
      for (int m = 0; m < 2; ++m) {
        const CMatrix g = per_bs[static_cast<std::size_t>(m)].g_rf * per_bs[static_cast<std::size_t>(m)].g_bb;
        for (int i = 0; i < 2; ++i) {
          const double q = std::norm(ch.h(m, n, k).dot(g.col(i)));
          if (m == n && i == k) {
            sig = q;
          } else {
            den += q;
          }
        }
      }
      rate += std::log2(1.0 + sig / den);
    }
  }
  EXPECT_NEAR(e.sum_rate, rate, 1e-10 * rate);
}

}  // namespace
