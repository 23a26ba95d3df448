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

#include "standard_form.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <utility>

namespace mccbf::conic {

using detail::Row;
using detail::StandardForm;
using detail::SymCoef;

namespace {

using Eigen::MatrixXd;
using cd = std::complex<double>;

std::string where(const std::string& kind, std::size_t idx, const std::string& label) {
  std::ostringstream os;
  os << kind << ' ' << idx;
  if (!label.empty()) os << " (" << label << ')';
  return os.str();
}

// [[Re, -Im], [Im, Re]]
MatrixXd embed(const CMatrix& h) {
  const auto n = h.rows();
  MatrixXd r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = h.real();
  r.topRightCorner(n, n) = -h.imag();
  r.bottomLeftCorner(n, n) = h.imag();
  r.bottomRightCorner(n, n) = h.real();
  return r;
}

bool has_imag(const CMatrix& m) { return m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 0.0; }

// Hermitian coefficient on one user block, kept as rank-one terms when possible.
struct HermCoef {
  int n = 0;
  std::vector<std::pair<double, CVector>> rank_one;
  CMatrix extra;  // empty unless a general matrix term was given

  bool empty() const { return rank_one.empty() && extra.size() == 0; }

  CMatrix dense() const {
    CMatrix h = extra.size() ? extra : CMatrix::Zero(n, n);
    for (const auto& [w, v] : rank_one) h.noalias() += w * v * v.adjoint();
    return h;
  }
};

// Tr(H X) as a real symmetric coefficient. Complex blocks use the embedding
// identity Tr(H X) = Tr(embed(H) embed(X)) / 2.
SymCoef to_sym(const HermCoef& hc, bool complex_block) {
  const CMatrix h = hc.dense();
  const MatrixXd r = complex_block ? MatrixXd(0.5 * embed(h)) : MatrixXd(h.real());
  const int nr = static_cast<int>(r.rows());
  std::vector<SymCoef::Entry> entries;
  double sparse_updates = 0.0;
  for (int c = 0; c < nr; ++c) {
    for (int q = 0; q <= c; ++q) {
      if (r(q, c) != 0.0) {
        entries.push_back({q, c, r(q, c)});
        sparse_updates += q == c ? 1.0 : 2.0;
      }
    }
  }
  const double n2 = static_cast<double>(nr) * nr;
  const double sparse_cost = sparse_updates * n2;
  const double dense_cost = 4.0 * n2 * nr;
  double lowrank_cost = std::numeric_limits<double>::infinity();
  if (hc.extra.size() == 0) {
    lowrank_cost = 3.0 * n2 * static_cast<double>(hc.rank_one.size()) * (complex_block ? 2.0 : 1.0);
  }
  if (sparse_cost <= lowrank_cost && sparse_cost <= dense_cost) return SymCoef::sparse(std::move(entries));
  if (lowrank_cost <= dense_cost) {
    const int k = static_cast<int>(hc.rank_one.size());
    const int per = complex_block ? 2 : 1;
    MatrixXd f(nr, per * k);
    Eigen::VectorXd w(per * k);
    for (int t = 0; t < k; ++t) {
      const auto& [wt, v] = hc.rank_one[static_cast<std::size_t>(t)];
      if (complex_block) {
        const auto n = v.size();
        f.col(2 * t) << v.real(), v.imag();
        f.col(2 * t + 1) << -v.imag(), v.real();
        w(2 * t) = 0.5 * wt;
        w(2 * t + 1) = 0.5 * wt;
        (void)n;
      } else {
        f.col(t) = v.real();
        w(t) = wt;
      }
    }
    return SymCoef::low_rank(std::move(f), std::move(w));
  }
  return SymCoef::dense(0.5 * (r + r.transpose()));
}

// Real parameters of a Hermitian matrix of side n.
struct Param {
  int p;
  int q;
  bool imag;
};

std::vector<Param> hermitian_params(int n, bool complex_valued) {
  std::vector<Param> out;
  for (int q = 0; q < n; ++q) {
    for (int p = 0; p <= q; ++p) {
      out.push_back({p, q, false});
      if (complex_valued && p != q) out.push_back({p, q, true});
    }
  }
  return out;
}

// Tr(E_param F) for the selector used by the primal reduction:
// real part of F(p,q), or imaginary part of F(p,q).
double select(const CMatrix& f, const Param& par) {
  return par.imag ? f(par.p, par.q).imag() : f(par.p, par.q).real();
}

// Q E Q^H for the selector E, as rank-one terms.
void selector_congruence(const CMatrix& qmap, const Param& par, double weight,
                         std::vector<std::pair<double, CVector>>& out) {
  const CVector a = qmap.col(par.p);
  if (par.p == par.q) {
    out.emplace_back(weight, a);
    return;
  }
  const CVector b = qmap.col(par.q);
  const cd i(0.0, 1.0);
  if (!par.imag) {
    // (a b^H + b a^H) / 2
    out.emplace_back(0.25 * weight, a + b);
    out.emplace_back(-0.25 * weight, a - b);
  } else {
    // i (a b^H - b a^H) / 2
    out.emplace_back(0.25 * weight, a - i * b);
    out.emplace_back(-0.25 * weight, a + i * b);
  }
}

// Slack coefficient of Tr(E_param S).
SymCoef selector_coef(int side, const Param& par, bool complex_valued) {
  std::vector<SymCoef::Entry> e;
  if (!complex_valued) {
    e.push_back({par.p, par.q, par.p == par.q ? 1.0 : 0.5});
  } else if (par.p == par.q) {
    e.push_back({par.p, par.p, 0.5});
    e.push_back({par.p + side, par.p + side, 0.5});
  } else if (!par.imag) {
    e.push_back({par.p, par.q, 0.25});
    e.push_back({par.p + side, par.q + side, 0.25});
  } else {
    e.push_back({par.q, par.p + side, 0.25});
    e.push_back({par.p, par.q + side, -0.25});
  }
  return SymCoef::sparse(std::move(e));
}

bool lmi_is_complex(const LmiConstraint& l) {
  if (!l.blocks.empty() || has_imag(l.constant)) return true;
  return std::any_of(l.scalars.begin(), l.scalars.end(),
                     [](const LmiScalarTerm& t) { return has_imag(t.coef); });
}

std::size_t lmi_param_count(const LmiConstraint& l) {
  const auto n = static_cast<std::size_t>(l.constant.rows());
  return lmi_is_complex(l) ? n * n : n * (n + 1) / 2;
}

void merge_lp(std::vector<std::pair<std::size_t, double>>& lp) {
  std::map<std::size_t, double> acc;
  for (const auto& [k, v] : lp) acc[k] += v;
  lp.clear();
  for (const auto& [k, v] : acc) {
    if (v != 0.0) lp.emplace_back(k, v);
  }
}

std::vector<HermCoef> trace_coefs(const SdpProblem& prob, const TraceConstraint& c) {
  std::vector<HermCoef> per_block(prob.blocks().size());
  for (std::size_t j = 0; j < per_block.size(); ++j) per_block[j].n = static_cast<int>(prob.blocks()[j].side);
  for (const auto& t : c.rank_one) per_block[t.block].rank_one.emplace_back(t.weight, t.vec);
  for (const auto& t : c.matrix) {
    auto& hc = per_block[t.block];
    if (hc.extra.size() == 0) hc.extra = CMatrix::Zero(hc.n, hc.n);
    hc.extra += t.coef;
  }
  return per_block;
}

// ---------------------------------------------------------------------------
// Primal reduction: user blocks and scalars are the primal variables; each
// LMI gets a PSD slack and one equality per real parameter.

struct PrimalMap {
  std::size_t n_user_blocks = 0;
  std::size_t n_scalars = 0;
};

StandardForm primal_reduction(const SdpProblem& prob, PrimalMap& map) {
  StandardForm sf;
  const auto& blocks = prob.blocks();
  map.n_user_blocks = blocks.size();
  map.n_scalars = prob.scalars().size();
  for (const auto& b : blocks) {
    const int n = static_cast<int>(b.side);
    sf.block_sizes.push_back(2 * n);
    sf.cost_blocks.push_back(0.5 * b.trace_cost * MatrixXd::Identity(2 * n, 2 * n));
  }
  std::size_t lp_dim = prob.scalars().size();

  for (const auto& c : prob.constraints()) {
    Row row;
    const auto per_block = trace_coefs(prob, c);
    for (std::size_t j = 0; j < per_block.size(); ++j) {
      if (!per_block[j].empty()) row.blocks.emplace_back(j, to_sym(per_block[j], true));
    }
    for (const auto& s : c.scalars) row.lp.emplace_back(s.scalar, s.coef);
    if (c.sense == Sense::GreaterEqual) row.lp.emplace_back(lp_dim++, -1.0);
    if (c.sense == Sense::LessEqual) row.lp.emplace_back(lp_dim++, 1.0);
    merge_lp(row.lp);
    row.rhs = c.rhs;
    sf.rows.push_back(std::move(row));
  }

  for (const auto& l : prob.lmis()) {
    const int side = static_cast<int>(l.constant.rows());
    const bool cplx = lmi_is_complex(l);
    const std::size_t slack = sf.block_sizes.size();
    sf.block_sizes.push_back(cplx ? 2 * side : side);
    sf.cost_blocks.push_back(MatrixXd::Zero(sf.block_sizes.back(), sf.block_sizes.back()));
    for (const auto& par : hermitian_params(side, cplx)) {
      Row row;
      row.blocks.emplace_back(slack, selector_coef(side, par, cplx));
      std::map<std::size_t, HermCoef> per_block;
      for (const auto& t : l.blocks) {
        auto& hc = per_block[t.block];
        hc.n = static_cast<int>(blocks[t.block].side);
        selector_congruence(t.map, par, -t.weight, hc.rank_one);
      }
      for (const auto& [j, hc] : per_block) row.blocks.emplace_back(j, to_sym(hc, true));
      for (const auto& s : l.scalars) row.lp.emplace_back(s.scalar, -select(s.coef, par));
      merge_lp(row.lp);
      row.rhs = select(l.constant, par);
      sf.rows.push_back(std::move(row));
    }
  }
  sf.lp_dim = lp_dim;
  sf.cost_lp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp_dim));
  for (std::size_t s = 0; s < prob.scalars().size(); ++s) {
    sf.cost_lp(static_cast<Eigen::Index>(s)) = prob.scalars()[s].cost;
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Dual reduction: the real parameters of every user block and scalar become
// free dual variables y; each cone (block PSD, scalar sign, inequality, LMI)
// is a slack of the form C - sum_i y_i A_i. Equalities are not supported.

struct DualParam {
  std::size_t block;  // npos for scalars
  Param par;
  std::size_t scalar;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::vector<DualParam> dual_params(const SdpProblem& prob) {
  std::vector<DualParam> out;
  for (std::size_t j = 0; j < prob.blocks().size(); ++j) {
    for (const auto& par : hermitian_params(static_cast<int>(prob.blocks()[j].side), true)) {
      out.push_back({j, par, kNone});
    }
  }
  for (std::size_t s = 0; s < prob.scalars().size(); ++s) out.push_back({kNone, {0, 0, false}, s});
  return out;
}

// Hermitian basis element of a block parameter: X = sum y E.
CMatrix basis(int n, const Param& par) {
  CMatrix e = CMatrix::Zero(n, n);
  if (par.p == par.q) {
    e(par.p, par.p) = 1.0;
  } else if (!par.imag) {
    e(par.p, par.q) = 1.0;
    e(par.q, par.p) = 1.0;
  } else {
    e(par.p, par.q) = cd(0.0, 1.0);
    e(par.q, par.p) = cd(0.0, -1.0);
  }
  return e;
}

// Tr(A E) for a Hermitian A and basis element E.
double basis_trace(const CMatrix& a, const Param& par) {
  if (par.p == par.q) return a(par.p, par.p).real();
  return par.imag ? 2.0 * a(par.p, par.q).imag() : 2.0 * a(par.p, par.q).real();
}

StandardForm dual_reduction(const SdpProblem& prob, std::vector<DualParam>& params) {
  params = dual_params(prob);
  StandardForm sf;
  sf.rows.resize(params.size());
  const auto& blocks = prob.blocks();

  std::vector<std::size_t> first_param(blocks.size(), 0);
  {
    std::size_t k = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      first_param[j] = k;
      k += blocks[j].side * blocks[j].side;
    }
  }
  const std::size_t scalar_base = params.size() - prob.scalars().size();

  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& dp = params[i];
    sf.rows[i].rhs = dp.block == kNone ? -prob.scalars()[dp.scalar].cost
                                       : (dp.par.p == dp.par.q ? -blocks[dp.block].trace_cost : 0.0);
  }

  // Block cones: slack = embed(X_j) = sum y embed(E), so A_i = -embed(E).
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const int n = static_cast<int>(blocks[j].side);
    const std::size_t cone = sf.block_sizes.size();
    sf.block_sizes.push_back(2 * n);
    sf.cost_blocks.push_back(MatrixXd::Zero(2 * n, 2 * n));
    for (std::size_t i = first_param[j]; i < first_param[j] + static_cast<std::size_t>(n) * n; ++i) {
      const Param& par = params[i].par;
      std::vector<SymCoef::Entry> e;
      if (par.p == par.q) {
        e.push_back({par.p, par.p, -1.0});
        e.push_back({par.p + n, par.p + n, -1.0});
      } else if (!par.imag) {
        e.push_back({par.p, par.q, -1.0});
        e.push_back({par.p + n, par.q + n, -1.0});
      } else {
        e.push_back({par.p, par.q + n, 1.0});
        e.push_back({par.q, par.p + n, -1.0});
      }
      sf.rows[i].blocks.emplace_back(cone, SymCoef::sparse(std::move(e)));
    }
  }

  std::vector<double> lp_cost;
  auto add_lp = [&](double c) {
    lp_cost.push_back(c);
    return lp_cost.size() - 1;
  };
  for (std::size_t s = 0; s < prob.scalars().size(); ++s) {
    const std::size_t e = add_lp(0.0);
    sf.rows[scalar_base + s].lp.emplace_back(e, -1.0);
  }

  for (const auto& c : prob.constraints()) {
    // z = sign * (sum coef y - rhs) >= 0
    const double sign = c.sense == Sense::GreaterEqual ? 1.0 : -1.0;
    const std::size_t e = add_lp(-sign * c.rhs);
    const auto per_block = trace_coefs(prob, c);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (per_block[j].empty()) continue;
      const CMatrix a = per_block[j].dense();
      const int n = per_block[j].n;
      for (std::size_t i = first_param[j]; i < first_param[j] + static_cast<std::size_t>(n) * n; ++i) {
        const double v = basis_trace(a, params[i].par);
        if (v != 0.0) sf.rows[i].lp.emplace_back(e, -sign * v);
      }
    }
    for (const auto& s : c.scalars) sf.rows[scalar_base + s.scalar].lp.emplace_back(e, -sign * s.coef);
  }

  for (const auto& l : prob.lmis()) {
    const int side = static_cast<int>(l.constant.rows());
    const bool cplx = lmi_is_complex(l);
    const std::size_t cone = sf.block_sizes.size();
    sf.block_sizes.push_back(cplx ? 2 * side : side);
    sf.cost_blocks.push_back(cplx ? embed(l.constant) : MatrixXd(l.constant.real()));
    auto to_coef = [&](const CMatrix& f) {
      const MatrixXd r = cplx ? embed(f) : MatrixXd(f.real());
      return SymCoef::from_matrix(-r);
    };
    std::map<std::size_t, std::vector<const CongruenceTerm*>> by_block;
    for (const auto& t : l.blocks) by_block[t.block].push_back(&t);
    for (const auto& [j, terms] : by_block) {
      const int n = static_cast<int>(blocks[j].side);
      if (terms.size() == 1) {
        // A_i = -w L^T embed(E_i) L with L = embed(Q); the solver caches X L^T per LMI.
        const CMatrix& q = terms[0]->map;
        auto lift = std::make_shared<MatrixXd>(2 * q.rows(), 2 * q.cols());
        lift->topLeftCorner(q.rows(), q.cols()) = q.real();
        lift->topRightCorner(q.rows(), q.cols()) = -q.imag();
        lift->bottomLeftCorner(q.rows(), q.cols()) = q.imag();
        lift->bottomRightCorner(q.rows(), q.cols()) = q.real();
        const double w = -terms[0]->weight;
        for (std::size_t i = first_param[j]; i < first_param[j] + static_cast<std::size_t>(n) * n; ++i) {
          const Param& par = params[i].par;
          std::vector<SymCoef::Entry> e;
          if (par.p == par.q) {
            e.push_back({par.p, par.p, w});
            e.push_back({par.p + n, par.p + n, w});
          } else if (!par.imag) {
            e.push_back({par.p, par.q, w});
            e.push_back({par.p + n, par.q + n, w});
          } else {
            e.push_back({par.p, par.q + n, -w});
            e.push_back({par.q, par.p + n, w});
          }
          sf.rows[i].blocks.emplace_back(cone, SymCoef::lifted(lift, std::move(e)));
        }
        continue;
      }
      for (std::size_t i = first_param[j]; i < first_param[j] + static_cast<std::size_t>(n) * n; ++i) {
        const Param& par = params[i].par;
        CMatrix f = CMatrix::Zero(side, side);
        for (const auto* t : terms) {
          // Q^H E Q from rows p and q of the map
          const auto rp = t->map.row(par.p);
          const auto rq = t->map.row(par.q);
          if (par.p == par.q) {
            f.noalias() += t->weight * rp.adjoint() * rp;
          } else if (!par.imag) {
            f.noalias() += t->weight * (rp.adjoint() * rq + rq.adjoint() * rp);
          } else {
            f.noalias() += t->weight * cd(0.0, 1.0) * (rp.adjoint() * rq - rq.adjoint() * rp);
          }
        }
        sf.rows[i].blocks.emplace_back(cone, to_coef(f));
      }
    }
    std::map<std::size_t, CMatrix> by_scalar;
    for (const auto& t : l.scalars) {
      auto it = by_scalar.find(t.scalar);
      if (it == by_scalar.end()) {
        by_scalar.emplace(t.scalar, t.coef);
      } else {
        it->second += t.coef;
      }
    }
    for (const auto& [s, coef] : by_scalar) sf.rows[scalar_base + s].blocks.emplace_back(cone, to_coef(coef));
  }

  for (auto& row : sf.rows) merge_lp(row.lp);
  sf.lp_dim = lp_cost.size();
  sf.cost_lp = Eigen::Map<Eigen::VectorXd>(lp_cost.data(), static_cast<Eigen::Index>(lp_cost.size()));
  return sf;
}

CMatrix unembed(const MatrixXd& r) {
  const auto n = r.rows() / 2;
  const MatrixXd re = 0.5 * (r.topLeftCorner(n, n) + r.bottomRightCorner(n, n));
  const MatrixXd im = 0.5 * (r.bottomLeftCorner(n, n) - r.topRightCorner(n, n));
  CMatrix h(n, n);
  h.real() = 0.5 * (re + re.transpose());
  h.imag() = 0.5 * (im - im.transpose());
  return h;
}

double user_objective(const SdpProblem& prob, const SdpSolution& sol) {
  double v = 0.0;
  for (std::size_t j = 0; j < prob.blocks().size(); ++j) {
    v += prob.blocks()[j].trace_cost * sol.blocks[j].trace().real();
  }
  for (std::size_t s = 0; s < prob.scalars().size(); ++s) v += prob.scalars()[s].cost * sol.scalars[s];
  return v;
}

}  // namespace

std::size_t SdpProblem::add_block(std::string name, std::size_t side, double trace_cost) {
  if (side == 0) throw DimensionMismatch("block " + name + " has zero side");
  blocks_.push_back({std::move(name), side, trace_cost});
  return blocks_.size() - 1;
}

std::size_t SdpProblem::add_scalar(std::string name, double cost) {
  scalars_.push_back({std::move(name), cost});
  return scalars_.size() - 1;
}

void SdpProblem::set_block_cost(std::size_t block, double trace_cost) { blocks_.at(block).trace_cost = trace_cost; }

void SdpProblem::set_scalar_cost(std::size_t scalar, double cost) { scalars_.at(scalar).cost = cost; }

void SdpProblem::add_constraint(TraceConstraint c) { constraints_.push_back(std::move(c)); }

void SdpProblem::add_lmi(LmiConstraint lmi) { lmis_.push_back(std::move(lmi)); }

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

void SdpProblem::validate() const {
  auto check_block = [&](std::size_t b, const std::string& ctx) {
    if (b >= blocks_.size()) throw DimensionMismatch(ctx + ": unknown block " + std::to_string(b));
  };
  auto check_scalar = [&](std::size_t s, const std::string& ctx) {
    if (s >= scalars_.size()) throw DimensionMismatch(ctx + ": unknown scalar " + std::to_string(s));
  };
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    const std::string ctx = where("constraint", i, c.label);
    for (const auto& t : c.rank_one) {
      check_block(t.block, ctx);
      if (static_cast<std::size_t>(t.vec.size()) != blocks_[t.block].side) {
        throw DimensionMismatch(ctx + ": vector length does not match block side");
      }
    }
    for (const auto& t : c.matrix) {
      check_block(t.block, ctx);
      const auto n = static_cast<Eigen::Index>(blocks_[t.block].side);
      if (t.coef.rows() != n || t.coef.cols() != n) {
        throw DimensionMismatch(ctx + ": coefficient does not match block side");
      }
      if (!is_hermitian(t.coef)) throw NonHermitianInput(ctx + ": coefficient is not Hermitian");
    }
    for (const auto& t : c.scalars) check_scalar(t.scalar, ctx);
  }
  for (std::size_t i = 0; i < lmis_.size(); ++i) {
    const auto& l = lmis_[i];
    const std::string ctx = where("lmi", i, l.label);
    const auto side = l.constant.rows();
    if (side == 0 || l.constant.cols() != side) throw DimensionMismatch(ctx + ": constant must be square");
    if (!is_hermitian(l.constant)) throw NonHermitianInput(ctx + ": constant is not Hermitian");
    for (const auto& t : l.blocks) {
      check_block(t.block, ctx);
      if (t.map.rows() != static_cast<Eigen::Index>(blocks_[t.block].side) || t.map.cols() != side) {
        throw DimensionMismatch(ctx + ": congruence map has the wrong shape");
      }
    }
    for (const auto& t : l.scalars) {
      check_scalar(t.scalar, ctx);
      if (t.coef.rows() != side || t.coef.cols() != side) {
        throw DimensionMismatch(ctx + ": scalar coefficient has the wrong shape");
      }
      if (!is_hermitian(t.coef)) throw NonHermitianInput(ctx + ": scalar coefficient is not Hermitian");
    }
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::MaxIter:
      return "max_iter";
  }
  return "unknown";
}

SdpSolution solve_sdp(const SdpProblem& prob, double tol, int max_iter) {
  SolverOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_sdp(prob, opt);
}

SdpSolution solve_sdp(const SdpProblem& prob, const SolverOptions& options) {
  prob.validate();
  const bool has_equality = std::any_of(prob.constraints().begin(), prob.constraints().end(),
                                        [](const TraceConstraint& c) { return c.sense == Sense::Equal; });
  Reduction red = options.reduction;
  if (red == Reduction::Auto) {
    std::size_t m_primal = prob.constraints().size();
    for (const auto& l : prob.lmis()) m_primal += lmi_param_count(l);
    std::size_t m_dual = prob.scalars().size();
    for (const auto& b : prob.blocks()) m_dual += b.side * b.side;
    red = (!has_equality && m_dual < m_primal) ? Reduction::Dual : Reduction::Primal;
  }
  if (red == Reduction::Dual && has_equality) {
    throw std::invalid_argument("dual reduction does not support equality constraints");
  }

  SdpSolution sol;
  sol.reduction_used = red;
  sol.blocks.resize(prob.blocks().size());
  sol.scalars.assign(prob.scalars().size(), 0.0);

  if (red == Reduction::Primal) {
    PrimalMap map;
    const StandardForm sf = primal_reduction(prob, map);
    const auto r = detail::solve_standard(sf, options.tol, options.max_iter);
    for (std::size_t j = 0; j < map.n_user_blocks; ++j) sol.blocks[j] = unembed(r.x[j]);
    for (std::size_t s = 0; s < map.n_scalars; ++s) sol.scalars[s] = r.x_lp(static_cast<Eigen::Index>(s));
    switch (r.status) {
      case detail::IpmStatus::Optimal:
        sol.status = SolveStatus::Optimal;
        break;
      case detail::IpmStatus::PrimalInfeasible:
        sol.status = SolveStatus::Infeasible;
        break;
      case detail::IpmStatus::DualInfeasible:
        sol.status = SolveStatus::Unbounded;
        break;
      case detail::IpmStatus::MaxIter:
        sol.status = SolveStatus::MaxIter;
        break;
    }
    sol.primal_residual = r.primal_residual;
    sol.dual_residual = r.dual_residual;
    sol.gap = r.gap;
    sol.iterations = r.iterations;
  } else {
    std::vector<DualParam> params;
    const StandardForm sf = dual_reduction(prob, params);
    const auto r = detail::solve_standard(sf, options.tol, options.max_iter);
    for (std::size_t j = 0; j < prob.blocks().size(); ++j) {
      const auto n = static_cast<Eigen::Index>(prob.blocks()[j].side);
      sol.blocks[j] = CMatrix::Zero(n, n);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double y = r.y(static_cast<Eigen::Index>(i));
      const auto& dp = params[i];
      if (dp.block == kNone) {
        sol.scalars[dp.scalar] = y;
        continue;
      }
      auto& x = sol.blocks[dp.block];
      x += y * basis(static_cast<int>(x.rows()), dp.par);
    }
    switch (r.status) {
      case detail::IpmStatus::Optimal:
        sol.status = SolveStatus::Optimal;
        break;
      case detail::IpmStatus::PrimalInfeasible:
        sol.status = SolveStatus::Unbounded;
        break;
      case detail::IpmStatus::DualInfeasible:
        sol.status = SolveStatus::Infeasible;
        break;
      case detail::IpmStatus::MaxIter:
        sol.status = SolveStatus::MaxIter;
        break;
    }
    sol.primal_residual = r.dual_residual;
    sol.dual_residual = r.primal_residual;
    sol.gap = r.gap;
    sol.iterations = r.iterations;
  }
  sol.objective = user_objective(prob, sol);
  return sol;
}

PrincipalPair extract_principal(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionMismatch("extract_principal needs a square matrix");
  if (!is_hermitian(m, 1e-8)) throw NonHermitianInput("extract_principal needs a Hermitian matrix");
  PrincipalPair out;
  const auto n = m.rows();
  if (m.cwiseAbs().maxCoeff() == 0.0) {
    out.eigenvector = CVector::Unit(n, 0);
    return out;
  }
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const auto& vals = es.eigenvalues();
  const double top = vals(n - 1);
  const double tie = 1e-12 * std::max(1.0, std::abs(top));
  Eigen::Index pick = n - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vals(i) >= top - tie) {
      pick = i;
      break;
    }
  }
  out.eigenvalue = top;
  CVector v = es.eigenvectors().col(pick);
  const double vn = v.norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v(i)) > 1e-12 * vn) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      break;
    }
  }
  out.eigenvector = v;
  return out;
}

void write_triplets(const SdpProblem& prob, std::ostream& os) {
  os.precision(17);
  auto emit_matrix = [&](std::size_t cid, const std::string& var, const CMatrix& h) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      for (Eigen::Index r = 0; r <= c; ++r) {
        if (h(r, c) != cd(0.0, 0.0)) {
          os << cid << ' ' << var << ' ' << r << ' ' << c << ' ' << h(r, c).real() << ' ' << h(r, c).imag() << '\n';
        }
      }
    }
  };
  os << "# 0 objective\n";
  for (std::size_t j = 0; j < prob.blocks().size(); ++j) {
    if (prob.blocks()[j].trace_cost != 0.0) os << "0 B" << j << " 0 0 " << prob.blocks()[j].trace_cost << " 0\n";
  }
  for (std::size_t s = 0; s < prob.scalars().size(); ++s) {
    if (prob.scalars()[s].cost != 0.0) os << "0 S" << s << " 0 0 " << prob.scalars()[s].cost << " 0\n";
  }
  std::size_t cid = 1;
  for (const auto& c : prob.constraints()) {
    const char* sense = c.sense == Sense::GreaterEqual ? ">=" : (c.sense == Sense::LessEqual ? "<=" : "==");
    os << "# " << cid << " trace " << sense << ' ' << c.label << '\n';
    const auto per_block = trace_coefs(prob, c);
    for (std::size_t j = 0; j < per_block.size(); ++j) {
      if (!per_block[j].empty()) emit_matrix(cid, "B" + std::to_string(j), per_block[j].dense());
    }
    for (const auto& s : c.scalars) os << cid << " S" << s.scalar << " 0 0 " << s.coef << " 0\n";
    os << cid << " R 0 0 " << c.rhs << " 0\n";
    ++cid;
  }
  for (const auto& l : prob.lmis()) {
    os << "# " << cid << " lmi " << l.label << '\n';
    emit_matrix(cid, "F0", l.constant);
    for (const auto& t : l.blocks) {
      os << cid << " W" << t.block << " 0 0 " << t.weight << " 0\n";
      for (Eigen::Index c = 0; c < t.map.cols(); ++c) {
        for (Eigen::Index r = 0; r < t.map.rows(); ++r) {
          if (t.map(r, c) != cd(0.0, 0.0)) {
            os << cid << " Q" << t.block << ' ' << r << ' ' << c << ' ' << t.map(r, c).real() << ' '
               << t.map(r, c).imag() << '\n';
          }
        }
      }
    }
    for (const auto& t : l.scalars) emit_matrix(cid, "S" + std::to_string(t.scalar), t.coef);
    ++cid;
  }
}

}  // namespace mccbf::conic
