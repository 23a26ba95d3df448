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

// Homogeneous self-dual interior-point method for the real standard form.
//
// Embedding:  A(X) - b tau = 0,  A^T y + Z - C tau = 0,
//             <C, X> - b^T y + kappa = 0,  (X, Z, tau, kappa) >= 0.
// Search directions use the HKM scaling E(D) = sym(X D Z^-1).

#include "standard_form.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace mccbf::conic::detail {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockVec {
  std::vector<MatrixXd> s;
  VectorXd lp;
};

double inner(const BlockVec& a, const BlockVec& b) {
  double v = a.lp.dot(b.lp);
  for (std::size_t k = 0; k < a.s.size(); ++k) v += a.s[k].cwiseProduct(b.s[k]).sum();
  return v;
}

double norm(const BlockVec& a) { return std::sqrt(inner(a, a)); }

void axpy(double alpha, const BlockVec& x, BlockVec& y) {
  for (std::size_t k = 0; k < y.s.size(); ++k) y.s[k] += alpha * x.s[k];
  y.lp += alpha * x.lp;
}

BlockVec zeros_like(const StandardForm& sf) {
  BlockVec v;
  for (int n : sf.block_sizes) v.s.push_back(MatrixXd::Zero(n, n));
  v.lp = VectorXd::Zero(static_cast<Eigen::Index>(sf.lp_dim));
  return v;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

class Solver {
 public:
  Solver(const StandardForm& sf, double tol, int max_iter)
      : sf_(sf), tol_(tol), max_iter_(max_iter) {
    m_ = sf_.rows.size();
    by_block_.resize(sf_.block_sizes.size());
    std::vector<Eigen::Triplet<double>> lp_trip;
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& [b, coef] : sf_.rows[i].blocks) by_block_[b].push_back({i, &coef});
      for (const auto& [k, a] : sf_.rows[i].lp) {
        lp_trip.emplace_back(static_cast<int>(i), static_cast<int>(k), a);
      }
    }
    plain_.resize(by_block_.size());
    groups_.resize(by_block_.size());
    for (std::size_t b = 0; b < by_block_.size(); ++b) {
      for (const auto& [i, coef] : by_block_[b]) {
        const auto* core = coef->core();
        if (!core) {
          plain_[b].emplace_back(i, coef);
          continue;
        }
        auto it = std::find_if(groups_[b].begin(), groups_[b].end(),
                               [&](const CoreGroup& g) { return g.lift == coef->lift(); });
        if (it == groups_[b].end()) it = groups_[b].insert(groups_[b].end(), CoreGroup{coef->lift(), {}});
        CoreRow r{i, coef, {}};
        for (const auto& e : *core) {
          r.full.emplace_back(e.row, e.col, e.value);
          if (e.row != e.col) r.full.emplace_back(e.col, e.row, e.value);
        }
        it->members.push_back(std::move(r));
      }
    }
    a_lp_.resize(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(sf_.lp_dim));
    a_lp_.setFromTriplets(lp_trip.begin(), lp_trip.end());
    b_.resize(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) b_(static_cast<Eigen::Index>(i)) = sf_.rows[i].rhs;
    c_.s = sf_.cost_blocks;
    c_.lp = sf_.cost_lp;
    nu_ = static_cast<double>(sf_.lp_dim);
    for (int n : sf_.block_sizes) nu_ += n;
  }

  IpmResult run();

 private:
  VectorXd apply_a(const BlockVec& x) const {
    VectorXd r = a_lp_ * x.lp;
    for (std::size_t b = 0; b < by_block_.size(); ++b) {
      for (const auto& [i, coef] : by_block_[b]) r(static_cast<Eigen::Index>(i)) += coef->dot(x.s[b]);
    }
    return r;
  }

  BlockVec apply_at(const VectorXd& y) const {
    BlockVec out = zeros_like(sf_);
    for (std::size_t b = 0; b < by_block_.size(); ++b) {
      for (const auto& [i, coef] : by_block_[b]) coef->add_to(out.s[b], y(static_cast<Eigen::Index>(i)));
    }
    out.lp = a_lp_.transpose() * y;
    return out;
  }

  // E(D) = sym(X D Z^-1) blockwise, x d / z on the orthant.
  BlockVec scale_op(const BlockVec& d) const {
    BlockVec out;
    out.s.resize(d.s.size());
    for (std::size_t b = 0; b < d.s.size(); ++b) out.s[b] = sym(x_.s[b] * d.s[b] * zinv_[b]);
    out.lp = x_.lp.cwiseProduct(d.lp).cwiseQuotient(z_.lp);
    return out;
  }

  bool factor();
  void build_schur();

  struct Direction {
    BlockVec dx, dz;
    VectorXd dy;
    double dtau = 0.0, dkappa = 0.0;
  };

  Direction solve(double eta, const BlockVec& rc, double rk) const;
  double max_step(const Direction& d) const;

  const StandardForm& sf_;
  double tol_;
  int max_iter_;
  std::size_t m_ = 0;
  double nu_ = 0.0;
  std::vector<std::vector<std::pair<std::size_t, const SymCoef*>>> by_block_;
  struct CoreRow {
    std::size_t row;
    const SymCoef* coef;
    std::vector<std::tuple<int, int, double>> full;  // both halves of off-diagonal entries
  };
  struct CoreGroup {
    const MatrixXd* lift;
    std::vector<CoreRow> members;
  };
  std::vector<std::vector<std::pair<std::size_t, const SymCoef*>>> plain_;
  std::vector<std::vector<CoreGroup>> groups_;
  Eigen::SparseMatrix<double> a_lp_;
  VectorXd b_;
  BlockVec c_;

  BlockVec x_, z_;
  VectorXd y_;
  double tau_ = 1.0, kappa_ = 1.0;
  std::vector<MatrixXd> zinv_;
  MatrixXd schur_;
  Eigen::LLT<MatrixXd> schur_llt_;
  VectorXd rp_;
  BlockVec rd_;
  double rg_ = 0.0;
  BlockVec ec_;
  VectorXd p_;
  double ec_c_ = 0.0;
};

bool Solver::factor() {
  zinv_.resize(z_.s.size());
  for (std::size_t b = 0; b < z_.s.size(); ++b) {
    Eigen::LLT<MatrixXd> llt(z_.s[b]);
    if (llt.info() != Eigen::Success) return false;
    zinv_[b] = llt.solve(MatrixXd::Identity(z_.s[b].rows(), z_.s[b].cols()));
    zinv_[b] = sym(zinv_[b]);
  }
  build_schur();
  const auto mm = static_cast<Eigen::Index>(m_);
  if (mm == 0) return true;
  double reg = 0.0;
  const double diag_max = std::max(schur_.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd mreg = schur_;
    if (reg > 0.0) mreg.diagonal().array() += reg;
    schur_llt_.compute(mreg);
    if (schur_llt_.info() == Eigen::Success) return true;
    reg = reg == 0.0 ? 1e-14 * diag_max : reg * 100.0;
  }
  return false;
}

void Solver::build_schur() {
  const auto mm = static_cast<Eigen::Index>(m_);
  schur_ = MatrixXd::Zero(mm, mm);
  auto add = [&](Eigen::Index i, Eigen::Index j, double v) {
    if (i <= j) {
      schur_(i, j) += v;
    } else {
      schur_(j, i) += v;
    }
  };
  std::vector<MatrixXd> g;
  for (std::size_t b = 0; b < by_block_.size(); ++b) {
    const auto& plain = plain_[b];
    const auto& groups = groups_[b];
    const int n = sf_.block_sizes[b];
    const MatrixXd& x = x_.s[b];
    const MatrixXd& zi = zinv_[b];
    // Rows without a core: M_ij = <A_j, X A_i Z^-1>, one sandwich per row.
    g.assign(plain.size(), MatrixXd::Zero(n, n));
    for (std::size_t p = 0; p < plain.size(); ++p) plain[p].second->sandwich(x, zi, g[p]);
    for (std::size_t p = 0; p < plain.size(); ++p) {
      const auto i = static_cast<Eigen::Index>(plain[p].first);
      const double cp = plain[p].second->dot_cost(n);
      for (std::size_t q = p; q < plain.size(); ++q) {
        const auto j = static_cast<Eigen::Index>(plain[q].first);
        add(i, j, cp <= plain[q].second->dot_cost(n) ? plain[p].second->dot(g[q]) : plain[q].second->dot(g[p]));
      }
      for (const auto& grp : groups) {
        for (const auto& m : grp.members) add(i, static_cast<Eigen::Index>(m.row), m.coef->dot(g[p]));
      }
    }
    // Core rows A = L_s^T E L_s: <A_p, X A_q Z^-1> = tr(E_p Xs E_q Zs) with
    // Xs = L_s X L_t^T and Zs = L_t Z^-1 L_s^T.
    for (std::size_t s = 0; s < groups.size(); ++s) {
      for (std::size_t t = s; t < groups.size(); ++t) {
        const MatrixXd* ls = groups[s].lift;
        const MatrixXd* lt = groups[t].lift;
        const MatrixXd xs = ls ? (lt ? MatrixXd(*ls * x * lt->transpose()) : MatrixXd(*ls * x))
                               : (lt ? MatrixXd(x * lt->transpose()) : x);
        const MatrixXd zs = lt ? (ls ? MatrixXd(*lt * zi * ls->transpose()) : MatrixXd(*lt * zi))
                               : (ls ? MatrixXd(zi * ls->transpose()) : zi);
        const auto& ms = groups[s].members;
        const auto& mt = groups[t].members;
        for (std::size_t p = 0; p < ms.size(); ++p) {
          for (std::size_t q = s == t ? p : 0; q < mt.size(); ++q) {
            double v = 0.0;
            for (const auto& [ea, eb, u] : ms[p].full) {
              for (const auto& [ec, ed, w] : mt[q].full) v += u * w * xs(eb, ec) * zs(ed, ea);
            }
            add(static_cast<Eigen::Index>(ms[p].row), static_cast<Eigen::Index>(mt[q].row), v);
          }
        }
      }
    }
  }
  if (sf_.lp_dim > 0) {
    const VectorXd d = x_.lp.cwiseQuotient(z_.lp);
    const Eigen::SparseMatrix<double> ad = a_lp_ * d.asDiagonal();
    const MatrixXd lp_part = MatrixXd(ad * a_lp_.transpose());
    schur_ += lp_part.triangularView<Eigen::Upper>().toDenseMatrix();
  }
  schur_.triangularView<Eigen::StrictlyLower>() = schur_.transpose().triangularView<Eigen::StrictlyLower>();
}

Solver::Direction Solver::solve(double eta, const BlockVec& rc, double rk) const {
  Direction d;
  const BlockVec e_rd = scale_op(rd_);
  VectorXd r1 = -eta * rp_ - apply_a(rc) - eta * apply_a(e_rd);
  const double r3 = -eta * rg_ - inner(c_, rc) - eta * inner(ec_, rd_) - rk / tau_;
  VectorXd u, w;
  if (m_ > 0) {
    u = schur_llt_.solve(p_ + b_);
    w = schur_llt_.solve(r1);
  } else {
    u = VectorXd::Zero(0);
    w = VectorXd::Zero(0);
  }
  const VectorXd pmb = p_ - b_;
  const double d33 = ec_c_ + kappa_ / tau_;
  const double denom = pmb.dot(u) - d33;
  d.dtau = (r3 - pmb.dot(w)) / denom;
  d.dy = w + u * d.dtau;
  d.dz = apply_at(d.dy);
  for (auto& s : d.dz.s) s = -s;
  d.dz.lp = -d.dz.lp;
  axpy(d.dtau, c_, d.dz);
  axpy(-eta, rd_, d.dz);
  d.dx = rc;
  axpy(-1.0, scale_op(d.dz), d.dx);
  d.dkappa = (rk - kappa_ * d.dtau) / tau_;
  return d;
}

double block_step(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto l = llt.matrixL();
  MatrixXd t = l.solve(dx);
  MatrixXd w = l.solve(t.transpose());
  w = sym(w);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : kInf;
}

double ray_step(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

double Solver::max_step(const Direction& d) const {
  double a = kInf;
  for (std::size_t b = 0; b < x_.s.size(); ++b) {
    a = std::min(a, block_step(x_.s[b], d.dx.s[b]));
    a = std::min(a, block_step(z_.s[b], d.dz.s[b]));
  }
  a = std::min(a, ray_step(x_.lp, d.dx.lp));
  a = std::min(a, ray_step(z_.lp, d.dz.lp));
  if (d.dtau < 0.0) a = std::min(a, -tau_ / d.dtau);
  if (d.dkappa < 0.0) a = std::min(a, -kappa_ / d.dkappa);
  return a;
}

IpmResult Solver::run() {
  IpmResult res;
  x_ = zeros_like(sf_);
  for (auto& s : x_.s) s.setIdentity();
  x_.lp.setOnes();
  z_ = x_;
  y_ = VectorXd::Zero(static_cast<Eigen::Index>(m_));
  tau_ = 1.0;
  kappa_ = 1.0;

  const double bnorm = b_.norm();
  const double cnorm = norm(c_);
  int stalls = 0;

  for (int it = 0; it <= max_iter_; ++it) {
    res.iterations = it;
    rp_ = apply_a(x_) - b_ * tau_;
    rd_ = apply_at(y_);
    axpy(1.0, z_, rd_);
    axpy(-tau_, c_, rd_);
    const double cx = inner(c_, x_);
    const double by = b_.dot(y_);
    rg_ = cx - by + kappa_;

    res.primal_residual = rp_.norm() / tau_ / (1.0 + bnorm);
    res.dual_residual = norm(rd_) / tau_ / (1.0 + cnorm);
    res.gap = std::abs(cx - by) / tau_ / (1.0 + std::abs(cx / tau_) + std::abs(by / tau_));
    if (res.primal_residual <= tol_ && res.dual_residual <= tol_ && res.gap <= tol_) {
      res.status = IpmStatus::Optimal;
      break;
    }
    if (by > 0.0) {
      BlockVec aty = rd_;
      axpy(tau_, c_, aty);
      if (norm(aty) <= tol_ * by) {
        res.status = IpmStatus::PrimalInfeasible;
        break;
      }
    }
    if (cx < 0.0) {
      const VectorXd ax = rp_ + b_ * tau_;
      if (ax.norm() <= tol_ * -cx) {
        res.status = IpmStatus::DualInfeasible;
        break;
      }
    }
    if (it == max_iter_ || stalls >= 5) break;

    const double mu = (inner(x_, z_) + tau_ * kappa_) / (nu_ + 1.0);
    if (!factor()) break;
    ec_ = scale_op(c_);
    p_ = apply_a(ec_);
    ec_c_ = inner(ec_, c_);

    // Predictor.
    BlockVec rc = x_;
    for (auto& s : rc.s) s = -s;
    rc.lp = -rc.lp;
    const Direction pred = solve(1.0, rc, -tau_ * kappa_);
    const double a_pred = std::min(1.0, max_step(pred));
    BlockVec xa = x_, za = z_;
    axpy(a_pred, pred.dx, xa);
    axpy(a_pred, pred.dz, za);
    const double mu_a = (inner(xa, za) + (tau_ + a_pred * pred.dtau) * (kappa_ + a_pred * pred.dkappa)) /
                        (nu_ + 1.0);
    const double sigma = std::clamp(std::pow(mu_a / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (std::size_t b = 0; b < rc.s.size(); ++b) {
      rc.s[b] = sigma * mu * zinv_[b] - x_.s[b] - sym(pred.dx.s[b] * pred.dz.s[b] * zinv_[b]);
    }
    rc.lp = (sigma * mu - pred.dx.lp.cwiseProduct(pred.dz.lp).array()).matrix().cwiseQuotient(z_.lp) - x_.lp;
    const double rk = sigma * mu - tau_ * kappa_ - pred.dtau * pred.dkappa;
    const Direction corr = solve(1.0 - sigma, rc, rk);
    const double alpha = std::min(1.0, 0.98 * max_step(corr));
    if (!(alpha > 1e-12)) {
      ++stalls;
      continue;
    }
    stalls = alpha < 1e-8 ? stalls + 1 : 0;

    axpy(alpha, corr.dx, x_);
    axpy(alpha, corr.dz, z_);
    y_ += alpha * corr.dy;
    tau_ += alpha * corr.dtau;
    kappa_ += alpha * corr.dkappa;
    for (auto& s : x_.s) s = sym(s);
    for (auto& s : z_.s) s = sym(s);
  }

  const double scale = res.status == IpmStatus::Optimal ? 1.0 / tau_ : 1.0;
  res.x = x_.s;
  res.z = z_.s;
  for (auto& s : res.x) s *= scale;
  for (auto& s : res.z) s *= scale;
  res.x_lp = x_.lp * scale;
  res.z_lp = z_.lp * scale;
  res.y = y_ * scale;
  return res;
}

}  // namespace

IpmResult solve_standard(const StandardForm& input, double tol, int max_iter) {
  StandardForm sf = input;
  // Row normalization, then global scaling of b and C.
  std::vector<double> row_scale(sf.rows.size(), 1.0);
  for (std::size_t i = 0; i < sf.rows.size(); ++i) {
    auto& row = sf.rows[i];
    double n2 = 0.0;
    for (const auto& [b, coef] : row.blocks) n2 += coef.frob2();
    for (const auto& [k, a] : row.lp) n2 += a * a;
    const double s = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 1.0;
    row_scale[i] = s;
    for (auto& [b, coef] : row.blocks) coef.scale(s);
    for (auto& [k, a] : row.lp) a *= s;
    row.rhs *= s;
  }
  double bn2 = 0.0;
  for (const auto& row : sf.rows) bn2 += row.rhs * row.rhs;
  // Unit-norm b keeps the objective near one, so the relative gap test is not
  // an absolute one in disguise when every target is small.
  const double bscale = bn2 > 0.0 ? std::sqrt(bn2) : 1.0;
  for (auto& row : sf.rows) row.rhs /= bscale;
  double cn2 = sf.cost_lp.squaredNorm();
  for (const auto& c : sf.cost_blocks) cn2 += c.squaredNorm();
  const double cscale = std::max(1.0, std::sqrt(cn2));
  for (auto& c : sf.cost_blocks) c /= cscale;
  sf.cost_lp /= cscale;

  Solver solver(sf, tol, max_iter);
  IpmResult res = solver.run();
  for (auto& s : res.x) s *= bscale;
  res.x_lp *= bscale;
  for (auto& s : res.z) s *= cscale;
  res.z_lp *= cscale;
  for (std::size_t i = 0; i < sf.rows.size(); ++i) {
    res.y(static_cast<Eigen::Index>(i)) *= cscale * row_scale[i];
  }
  return res;
}

}  // namespace mccbf::conic::detail
