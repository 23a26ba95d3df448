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

#include "mccbf/conic.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace {

using namespace mccbf::conic;
using cd = std::complex<double>;

CVector random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(nd(rng), nd(rng));
  return v;
}

CMatrix random_herm(std::mt19937_64& rng, int n) {
  CMatrix a(n, n);
  for (int j = 0; j < n; ++j) a.col(j) = random_vec(rng, n);
  return 0.5 * (a + a.adjoint());
}

TEST(Conic, IdentityLmiHasTraceObjective) {
  for (auto red : {Reduction::Primal, Reduction::Dual}) {
    SdpProblem p;
    const auto g = p.add_block("G", 3, 1.0);
    LmiConstraint l;
    l.constant = -CMatrix::Identity(3, 3);
    l.blocks.push_back({g, 1.0, CMatrix::Identity(3, 3)});
    p.add_lmi(l);
    SolverOptions opt;
    opt.reduction = red;
    const auto s = solve_sdp(p, opt);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.objective, 3.0, 1e-6);
    EXPECT_NEAR((s.blocks[0] - CMatrix::Identity(3, 3)).norm(), 0.0, 1e-5);
  }
}

TEST(Conic, SingleUserPowerMatchesClosedForm) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    const CVector h = random_vec(rng, n);
    const double gamma = 0.5 + (trial % 5);
    const double sigma2 = 1.0;
    SdpProblem p;
    const auto g = p.add_block("G", static_cast<std::size_t>(n), 1.0);
    TraceConstraint c;
    c.rank_one.push_back({g, 1.0, h});
    c.rhs = gamma * sigma2;
    p.add_constraint(c);
    const auto s = solve_sdp(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    const double expect = gamma * sigma2 / h.squaredNorm();
    EXPECT_NEAR(s.objective, expect, 1e-6 * std::max(1.0, expect));
  }
}

TEST(Conic, NegativeTraceIsInfeasible) {
  for (auto red : {Reduction::Primal, Reduction::Dual}) {
    SdpProblem p;
    const auto g = p.add_block("G", 2, 1.0);
    TraceConstraint c;
    c.matrix.push_back({g, CMatrix::Identity(2, 2)});
    c.sense = Sense::LessEqual;
    c.rhs = -1.0;
    p.add_constraint(c);
    SolverOptions opt;
    opt.reduction = red;
    EXPECT_EQ(solve_sdp(p, opt).status, SolveStatus::Infeasible);
  }
}

TEST(Conic, UnboundedScalar) {
  SdpProblem p;
  const auto g = p.add_block("G", 2, 1.0);
  const auto s = p.add_scalar("s", -1.0);
  TraceConstraint c;  // s >= Tr(G), nothing bounds s from above
  c.matrix.push_back({g, -CMatrix::Identity(2, 2)});
  c.scalars.push_back({s, 1.0});
  c.rhs = 0.0;
  p.add_constraint(c);
  EXPECT_EQ(solve_sdp(p).status, SolveStatus::Unbounded);
}

TEST(Conic, MinEigenvalueViaTraceEquality) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix c = random_herm(rng, 4);
    // min Tr(C X) s.t. Tr(X) = 1 equals lambda_min(C); encode cost via an epigraph scalar.
    SdpProblem p;
    const auto x = p.add_block("X", 4, 0.0);
    const auto t = p.add_scalar("t", 1.0);
    const auto u = p.add_scalar("u", -1.0);
    TraceConstraint norm1;
    norm1.matrix.push_back({x, CMatrix::Identity(4, 4)});
    norm1.sense = Sense::Equal;
    norm1.rhs = 1.0;
    p.add_constraint(norm1);
    TraceConstraint epi;  // t - u = Tr(C X)
    epi.matrix.push_back({x, c});
    epi.scalars.push_back({t, -1.0});
    epi.scalars.push_back({u, 1.0});
    epi.sense = Sense::Equal;
    p.add_constraint(epi);
    const auto s = solve_sdp(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c);
    EXPECT_NEAR(s.objective, es.eigenvalues()(0), 1e-6);
  }
}

// Robust-style LMI: [I; h^H] (G/g) [I h] + [[lam I, 0], [0, -s - lam eps^2]] >= 0.
SdpProblem robust_like(std::mt19937_64& rng, int n, double eps) {
  SdpProblem p;
  const auto g = p.add_block("G", static_cast<std::size_t>(n), 1.0);
  const auto lam = p.add_scalar("lam");
  const CVector h = random_vec(rng, n);
  LmiConstraint l;
  CMatrix map(n, n + 1);
  map.leftCols(n) = CMatrix::Identity(n, n);
  map.col(n) = h;
  l.constant = CMatrix::Zero(n + 1, n + 1);
  l.constant(n, n) = -1.0;
  l.blocks.push_back({g, 1.0, map});
  CMatrix lc = CMatrix::Identity(n + 1, n + 1);
  lc(n, n) = -eps * eps;
  l.scalars.push_back({lam, lc});
  p.add_lmi(l);
  return p;
}

TEST(Conic, PrimalAndDualReductionsAgree) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = robust_like(rng, 4, 0.2);
    SolverOptions a, b;
    a.reduction = Reduction::Primal;
    b.reduction = Reduction::Dual;
    const auto sa = solve_sdp(p, a);
    const auto sb = solve_sdp(p, b);
    ASSERT_EQ(sa.status, SolveStatus::Optimal);
    ASSERT_EQ(sb.status, SolveStatus::Optimal);
    EXPECT_NEAR(sa.objective, sb.objective, 1e-6 * std::max(1.0, std::abs(sa.objective)));
  }
}

TEST(Conic, RobustSingleUserClosedForm) {
  // min Tr G s.t. |(h+e)^H g|^2 >= 1 for all |e| <= eps has value 1/(|h|-eps)^2.
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = robust_like(rng, 3, 0.3);
    const CVector h = p.lmis()[0].blocks[0].map.col(3);
    const auto s = solve_sdp(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    const double expect = 1.0 / std::pow(h.norm() - 0.3, 2);
    EXPECT_NEAR(s.objective, expect, 1e-5 * expect);
  }
}

TEST(Conic, RejectsNonHermitian) {
  SdpProblem p;
  const auto g = p.add_block("G", 2, 1.0);
  TraceConstraint c;
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  c.matrix.push_back({g, a});
  p.add_constraint(c);
  EXPECT_THROW(solve_sdp(p), NonHermitianInput);
}

TEST(Conic, RejectsBadDimensions) {
  SdpProblem p;
  const auto g = p.add_block("G", 2, 1.0);
  TraceConstraint c;
  c.rank_one.push_back({g, 1.0, CVector::Ones(3)});
  p.add_constraint(c);
  EXPECT_THROW(solve_sdp(p), DimensionMismatch);
}

TEST(ExtractPrincipal, Examples) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  auto pp = extract_principal(d);
  EXPECT_NEAR(pp.eigenvalue, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(pp.eigenvector(0) - 1.0), 0.0, 1e-12);

  pp = extract_principal(CMatrix::Zero(3, 3));
  EXPECT_EQ(pp.eigenvalue, 0.0);
  EXPECT_EQ(pp.eigenvector, CVector::Unit(3, 0));

  pp = extract_principal(CMatrix::Identity(2, 2));
  EXPECT_NEAR(pp.eigenvalue, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(pp.eigenvector(0) - 1.0), 0.0, 1e-12);

  std::mt19937_64 rng(3);
  const CVector g = random_vec(rng, 5);
  pp = extract_principal(g * g.adjoint());
  EXPECT_NEAR(pp.eigenvalue, g.squaredNorm(), 1e-10);
  EXPECT_NEAR(pp.eigenvector(0).imag(), 0.0, 1e-12);
  EXPECT_GT(pp.eigenvector(0).real(), 0.0);
  const CVector back = std::sqrt(pp.eigenvalue) * pp.eigenvector;
  EXPECT_NEAR((back * back.adjoint() - g * g.adjoint()).norm(), 0.0, 1e-10);
}

TEST(Triplets, DumpListsEveryConstraint) {
  SdpProblem p;
  const auto g = p.add_block("G", 2, 1.0);
  TraceConstraint c;
  c.matrix.push_back({g, CMatrix::Identity(2, 2)});
  c.rhs = 1.0;
  c.label = "unit";
  p.add_constraint(c);
  std::ostringstream os;
  write_triplets(p, os);
  const std::string s = os.str();
  EXPECT_NE(s.find("1 B0 0 0 1 0"), std::string::npos);
  EXPECT_NE(s.find("1 B0 1 1 1 0"), std::string::npos);
  EXPECT_NE(s.find("1 R 0 0 1 0"), std::string::npos);
}

}  // namespace
