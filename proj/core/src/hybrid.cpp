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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace mccbf::hybrid {

Posterior bl_posterior(const Eigen::VectorXd& gamma, double sigma_e2, const CMatrix& dict, const CMatrix& g_opt,
                       double max_condition) {
  if (dict.cols() != gamma.size() || dict.rows() != g_opt.rows()) {
    throw InvalidDimensions("dictionary, hyperparameters and precoder sizes disagree");
  }
  // Woodbury form: only an N_t x N_t system is factored.
  const CMatrix gf = gamma.asDiagonal() * dict.adjoint();  // Gamma F^H
  CMatrix inner = dict * gf;
  inner.diagonal().array() += sigma_e2;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(inner);
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 0.0) || ev(ev.size() - 1) > max_condition * ev(0)) {
    throw SingularCovariance("posterior innovation matrix is singular");
  }
  const CMatrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  Posterior p;
  p.cov = -gf * inv * gf.adjoint();
  p.cov.diagonal() += gamma.cast<std::complex<double>>();
  p.cov = 0.5 * (p.cov + p.cov.adjoint()).eval();
  p.mean = gf * (inv * g_opt);
  return p;
}

Eigen::VectorXd bl_m_step(const CMatrix& mean, const CMatrix& cov, int users, double floor) {
  Eigen::VectorXd g(mean.rows());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    g(i) = std::max(mean.row(i).squaredNorm() / users + cov(i, i).real(), floor);
  }
  return g;
}

namespace {

HybridPrecoder refit(const CMatrix& g_opt, const CMatrix& dict, std::vector<int> support) {
  HybridPrecoder h;
  h.support = std::move(support);
  h.g_rf.resize(dict.rows(), static_cast<Eigen::Index>(h.support.size()));
  for (std::size_t j = 0; j < h.support.size(); ++j) h.g_rf.col(static_cast<Eigen::Index>(j)) = dict.col(h.support[j]);
  h.g_bb = h.g_rf.completeOrthogonalDecomposition().solve(g_opt);
  h.residual = (g_opt - h.g_rf * h.g_bb).norm();
  return h;
}

void check_sizes(const CMatrix& g_opt, const CMatrix& dict, int n_rf) {
  if (dict.rows() != g_opt.rows()) throw InvalidDimensions("dictionary and precoder row counts differ");
  if (n_rf < 1 || n_rf > dict.cols()) throw InvalidDimensions("RF chain count outside [1, G]");
}

}  // namespace

HybridPrecoder bl_decompose(const CMatrix& g_opt, const CMatrix& dict, int n_rf, const BlOptions& opt) {
  check_sizes(g_opt, dict, n_rf);
  const double scale = g_opt.norm();
  if (scale == 0.0) {
    std::vector<int> first(static_cast<std::size_t>(n_rf));
    std::iota(first.begin(), first.end(), 0);
    return refit(g_opt, dict, first);
  }
  // The noise variance is relative to a unit-norm target.
  const CMatrix target = g_opt / scale;
  const int users = static_cast<int>(g_opt.cols());
  Eigen::VectorXd gamma = Eigen::VectorXd::Ones(dict.cols());
  bool converged = false;
  int it = 0;
  while (it < opt.eta_max) {
    ++it;
    const auto post = bl_posterior(gamma, opt.sigma_e2, dict, target, opt.max_condition);
    const Eigen::VectorXd next = bl_m_step(post.mean, post.cov, users, opt.gamma_floor);
    const double delta = (next - gamma).cwiseAbs().maxCoeff();
    gamma = next;
    if (delta < opt.rho) {
      converged = true;
      break;
    }
  }
  std::vector<int> order(static_cast<std::size_t>(dict.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gamma(a) > gamma(b); });
  order.resize(static_cast<std::size_t>(n_rf));
  auto h = refit(g_opt, dict, order);
  h.converged = converged;
  h.iterations = it;
  return h;
}

HybridPrecoder somp_decompose(const CMatrix& g_opt, const CMatrix& dict, int n_rf) {
  check_sizes(g_opt, dict, n_rf);
  std::vector<int> support;
  std::vector<bool> used(static_cast<std::size_t>(dict.cols()), false);
  CMatrix resid = g_opt;
  HybridPrecoder h;
  for (int r = 0; r < n_rf; ++r) {
    const Eigen::VectorXd corr = (dict.adjoint() * resid).rowwise().squaredNorm();
    int best = -1;
    for (Eigen::Index g = 0; g < dict.cols(); ++g) {
      if (used[static_cast<std::size_t>(g)]) continue;
      if (best < 0 || corr(g) > corr(best)) best = static_cast<int>(g);
    }
    used[static_cast<std::size_t>(best)] = true;
    support.push_back(best);
    h = refit(g_opt, dict, support);
    resid = g_opt - h.g_rf * h.g_bb;
  }
  h.iterations = n_rf;
  return h;
}

CMatrix precoder_matrix(const FdBeamformers& bf, int n) {
  const auto nt = bf.at(n, 0).size();
  CMatrix g(nt, bf.users);
  for (int k = 0; k < bf.users; ++k) g.col(k) = bf.at(n, k);
  return g;
}

FdBeamformers to_beamformers(const std::vector<HybridPrecoder>& per_bs, int users, int antennas) {
  FdBeamformers bf(static_cast<int>(per_bs.size()), users, antennas);
  for (std::size_t n = 0; n < per_bs.size(); ++n) {
    const CMatrix g = per_bs[n].g_rf * per_bs[n].g_bb;
    if (g.rows() != antennas || g.cols() != users) throw InvalidDimensions("hybrid precoder has the wrong shape");
    for (int k = 0; k < users; ++k) bf.at(static_cast<int>(n), k) = g.col(k);
  }
  return bf;
}

HybridEvaluation evaluate_hybrid(const ChannelSet& channels, const std::vector<HybridPrecoder>& per_bs,
                                 const SystemConfig& cfg) {
  const auto bf = to_beamformers(per_bs, cfg.users, cfg.antennas);
  HybridEvaluation e;
  e.sinr = metrics::sinr(bf, channels, cfg);
  e.sum_rate = metrics::sum_rate(e.sinr);
  return e;
}

}  // namespace mccbf::hybrid
