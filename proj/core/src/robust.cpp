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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mccbf::robust {

UncertaintyModel UncertaintyModel::spherical(double eps) {
  UncertaintyModel u;
  u.eps = eps;
  return u;
}

void UncertaintyModel::validate(const ChannelSet& channels) const {
  const auto links = static_cast<std::size_t>(channels.cells() * channels.cells() * channels.users());
  if (kind == Kind::Spherical) {
    if (!(eps >= 0.0)) throw InvalidDimensions("uncertainty radius must be nonnegative");
    if (!eps_link.empty() && eps_link.size() != links) throw InvalidDimensions("per-link radii have the wrong size");
    for (double e : eps_link) {
      if (!(e >= 0.0)) throw InvalidDimensions("uncertainty radius must be nonnegative");
    }
    return;
  }
  if (r_link.size() != links) throw InvalidDimensions("ellipsoidal model needs one shape per link");
  for (const auto& r : r_link) {
    if (r.rows() != channels.antennas() || r.cols() != channels.antennas()) {
      throw InvalidDimensions("ellipsoid shape has the wrong size");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    if (!(es.eigenvalues()(0) > 0.0)) throw InvalidDimensions("ellipsoid shape must be positive definite");
  }
}

bool UncertaintyModel::exact(const ChannelSet& channels, int m, int n, int k) const {
  if (kind == Kind::Ellipsoidal) return false;
  const double e = eps_link.empty() ? eps : eps_link[channels.index(m, n, k)];
  return e == 0.0;
}

LinkShape link_shape(const UncertaintyModel& unc, const ChannelSet& channels, int m, int n, int k) {
  LinkShape s;
  const auto nt = channels.antennas();
  if (unc.kind == UncertaintyModel::Kind::Ellipsoidal) {
    s.p = unc.r_link[channels.index(m, n, k)];
    s.q = 1.0;
  } else {
    const double e = unc.eps_link.empty() ? unc.eps : unc.eps_link[channels.index(m, n, k)];
    s.p = CMatrix::Identity(nt, nt);
    s.q = e * e;
  }
  return s;
}

namespace {

// [I | h], mapping an N_t block to an (N_t + 1) LMI.
CMatrix lift(const CVector& h) {
  const auto nt = h.size();
  CMatrix q = CMatrix::Zero(nt, nt + 1);
  q.leftCols(nt).setIdentity();
  q.col(nt) = h;
  return q;
}

CMatrix corner(Eigen::Index side) {
  CMatrix e = CMatrix::Zero(side, side);
  e(side - 1, side - 1) = 1.0;
  return e;
}

CMatrix multiplier_coef(const LinkShape& shape) {
  const auto nt = shape.p.rows();
  CMatrix c = CMatrix::Zero(nt + 1, nt + 1);
  c.topLeftCorner(nt, nt) = shape.p;
  c(nt, nt) = -shape.q;
  return c;
}

}  // namespace

conic::LmiConstraint build_phi(const std::vector<std::size_t>& blocks, std::size_t user, double gamma,
                               const std::vector<std::size_t>& interference, double constant, std::size_t mu,
                               const CVector& h, const LinkShape& shape) {
  const auto side = h.size() + 1;
  if (shape.p.rows() != h.size() || shape.p.cols() != h.size()) {
    throw conic::DimensionMismatch("uncertainty shape does not match the channel");
  }
  conic::LmiConstraint l;
  const CMatrix q = lift(h);
  for (std::size_t i = 0; i < blocks.size(); ++i) l.blocks.push_back({blocks[i], i == user ? 1.0 / gamma : -1.0, q});
  l.constant = -constant * corner(side);
  for (auto s : interference) l.scalars.push_back({s, -corner(side)});
  l.scalars.push_back({mu, multiplier_coef(shape)});
  l.label = "phi";
  return l;
}

conic::LmiConstraint build_psi(const std::vector<std::size_t>& blocks, std::optional<std::size_t> v_index,
                               double fixed_v, std::size_t mu, const CVector& h, const LinkShape& shape) {
  const auto side = h.size() + 1;
  if (shape.p.rows() != h.size() || shape.p.cols() != h.size()) {
    throw conic::DimensionMismatch("uncertainty shape does not match the channel");
  }
  conic::LmiConstraint l;
  const CMatrix q = lift(h);
  for (auto b : blocks) l.blocks.push_back({b, -1.0, q});
  l.constant = CMatrix::Zero(side, side);
  if (v_index) {
    l.scalars.push_back({*v_index, corner(side)});
  } else {
    l.constant(side - 1, side - 1) = fixed_v;
  }
  l.scalars.push_back({mu, multiplier_coef(shape)});
  l.label = "psi";
  return l;
}

TrsResult trs_min(const CMatrix& a, const CVector& b, double c0, double radius) {
  TrsResult res;
  const auto dim = a.rows();
  res.xi = CVector::Zero(dim);
  res.value = c0;
  if (radius <= 0.0 || dim == 0) return res;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const CVector beta = es.eigenvectors().adjoint() * b;
  const Eigen::VectorXd b2 = beta.cwiseAbs2();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double deg = 1e-12 * scale;
  const double r2 = radius * radius;
  const double l1 = lam(0);

  auto norm2 = [&](double mu, bool skip_min) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (skip_min && lam(i) <= l1 + deg) continue;
      s += b2(i) / ((lam(i) + mu) * (lam(i) + mu));
    }
    return s;
  };
  auto solution = [&](double mu, bool skip_min) {
    CVector x = CVector::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (skip_min && lam(i) <= l1 + deg) continue;
      x(i) = -beta(i) / (lam(i) + mu);
    }
    return x;
  };

  CVector x;
  const double lo = std::max(0.0, -l1);
  double min_mass = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (lam(i) <= l1 + deg) min_mass += b2(i);
  }
  const double bnorm2 = b2.sum();
  if (l1 > deg && norm2(0.0, false) <= r2) {
    x = solution(0.0, false);
  } else if (min_mass <= 1e-24 * std::max(bnorm2, 1e-300) && norm2(lo, true) <= r2) {
    // Hard case: the gradient has no component along the lowest eigenspace.
    x = solution(lo, true);
    const double rest = r2 - x.squaredNorm();
    if (l1 < 0.0 && rest > 0.0) x(0) += std::sqrt(rest);
  } else {
    // Secular equation 1/||x(mu)|| = 1/radius; increasing and concave in mu.
    double left = lo;
    double right = std::max(lo, std::sqrt(bnorm2) / radius - l1) + deg;
    auto phi = [&](double mu) { return 1.0 / std::sqrt(norm2(mu, false)) - 1.0 / radius; };
    while (phi(right) < 0.0) right = 2.0 * right + 1.0;
    double mu = right;
    for (int it = 0; it < 200; ++it) {
      const double f = phi(mu);
      if (std::abs(f) <= 1e-15 / radius) break;
      if (f < 0.0) {
        left = mu;
      } else {
        right = mu;
      }
      double d3 = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) d3 += b2(i) / std::pow(lam(i) + mu, 3);
      const double n2 = norm2(mu, false);
      const double grad = d3 / std::pow(n2, 1.5);
      double next = mu - f / grad;
      if (!(next > left && next < right)) next = 0.5 * (left + right);
      if (right - left <= 1e-15 * std::max(1.0, right)) break;
      mu = next;
    }
    x = solution(mu, false);
  }
  double v = c0;
  for (Eigen::Index i = 0; i < dim; ++i) v += lam(i) * std::norm(x(i)) + 2.0 * std::real(std::conj(beta(i)) * x(i));
  res.value = v;
  res.xi = es.eigenvectors() * x;
  return res;
}

namespace {

// Quadratic (h + xi)^H A (h + xi) over the shape set, written in a unit-ball variable.
struct BallQuadratic {
  CMatrix a;
  CVector b;
  double c0 = 0.0;
  double radius = 0.0;
};

BallQuadratic to_ball(const CVector& h, const CMatrix& a, const LinkShape& shape) {
  BallQuadratic q;
  q.c0 = std::real(h.dot(a * h));
  if (shape.q == 0.0) return q;
  // Ball: P = I, q = eps^2. Ellipsoid xi^H R xi <= 1: xi = R^{-1/2} u.
  const bool ball = shape.p.isIdentity(0.0);
  if (ball) {
    q.a = a;
    q.b = a * h;
    q.radius = std::sqrt(shape.q);
    return q;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(shape.p);
  const CMatrix s = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().adjoint() * std::sqrt(shape.q);
  q.a = s * a * s;
  q.b = s * (a * h);
  q.radius = 1.0;
  return q;
}

}  // namespace

double worst_case_quadratic(const CVector& h, const CMatrix& a, const LinkShape& shape) {
  const auto q = to_ball(h, a, shape);
  if (q.radius == 0.0) return q.c0;
  return -trs_min(-q.a, -q.b, -q.c0, q.radius).value;
}

double best_case_quadratic(const CVector& h, const CMatrix& a, const LinkShape& shape) {
  const auto q = to_ball(h, a, shape);
  if (q.radius == 0.0) return q.c0;
  return trs_min(q.a, q.b, q.c0, q.radius).value;
}

double worst_case_quadratic(const CVector& h, const CMatrix& a, double eps) {
  LinkShape s;
  s.p = CMatrix::Identity(h.size(), h.size());
  s.q = eps * eps;
  return worst_case_quadratic(h, a, s);
}

namespace {

std::size_t block_of(const SystemConfig& cfg, int n, int k) { return static_cast<std::size_t>(n * cfg.users + k); }

void check(const ChannelSet& channels, const SystemConfig& cfg, const UncertaintyModel& unc) {
  cfg.validate();
  if (channels.cells() != cfg.cells || channels.users() != cfg.users || channels.antennas() != cfg.antennas) {
    throw conic::DimensionMismatch("channel set does not match the system configuration");
  }
  unc.validate(channels);
}

// Projection onto the channel span keeps every robust constraint feasible only
// for isotropic balls; ellipsoids are solved at full dimension.
std::optional<ChannelSubspace> reduce(const ChannelSet& channels, const SystemConfig& cfg,
                                      const UncertaintyModel& unc) {
  if (unc.kind != UncertaintyModel::Kind::Spherical) return std::nullopt;
  return channel_subspace(channels, cfg);
}

// Nominal Phi as a trace inequality: h^H M h - sum(interference) >= constant.
conic::TraceConstraint nominal_phi(const std::vector<std::size_t>& blocks, std::size_t user, double gamma,
                                   const std::vector<std::size_t>& interference, double constant, const CVector& h) {
  conic::TraceConstraint c;
  for (std::size_t i = 0; i < blocks.size(); ++i) c.rank_one.push_back({blocks[i], i == user ? 1.0 / gamma : -1.0, h});
  for (auto s : interference) c.scalars.push_back({s, -1.0});
  c.sense = conic::Sense::GreaterEqual;
  c.rhs = constant;
  c.label = "phi";
  return c;
}

conic::TraceConstraint nominal_psi(const std::vector<std::size_t>& blocks, std::optional<std::size_t> v_index,
                                   double fixed_v, const CVector& h) {
  conic::TraceConstraint c;
  for (auto b : blocks) c.rank_one.push_back({b, 1.0, h});
  if (v_index) c.scalars.push_back({*v_index, -1.0});
  c.sense = conic::Sense::LessEqual;
  c.rhs = v_index ? 0.0 : fixed_v;
  c.label = "psi";
  return c;
}

}  // namespace

conic::SdpProblem build_robust_problem(const ChannelSet& channels, const SystemConfig& cfg,
                                       const UncertaintyModel& unc) {
  check(channels, cfg, unc);
  const int n_cells = cfg.cells;
  const int k_users = cfg.users;
  conic::SdpProblem p;
  for (int n = 0; n < n_cells; ++n) {
    for (int k = 0; k < k_users; ++k) {
      p.add_block("G_" + std::to_string(n + 1) + std::to_string(k + 1), static_cast<std::size_t>(cfg.antennas),
                  cfg.beta(n));
    }
  }
  // v_mnk: interference from BS m onto user k of cell n.
  std::vector<std::size_t> v_idx(static_cast<std::size_t>(n_cells * n_cells * k_users));
  for (int m = 0; m < n_cells; ++m) {
    for (int n = 0; n < n_cells; ++n) {
      if (m == n) continue;
      for (int k = 0; k < k_users; ++k) {
        v_idx[channels.index(m, n, k)] =
            p.add_scalar("v_" + std::to_string(m + 1) + std::to_string(n + 1) + std::to_string(k + 1));
      }
    }
  }
  for (int n = 0; n < n_cells; ++n) {
    std::vector<std::size_t> blocks;
    for (int i = 0; i < k_users; ++i) blocks.push_back(block_of(cfg, n, i));
    for (int k = 0; k < k_users; ++k) {
      std::vector<std::size_t> inter;
      for (int m = 0; m < n_cells; ++m) {
        if (m != n) inter.push_back(v_idx[channels.index(m, n, k)]);
      }
      const auto& h = channels.h(n, n, k);
      if (unc.exact(channels, n, n, k)) {
        p.add_constraint(nominal_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), inter, cfg.sigma2(n, k), h));
      } else {
        const auto mu = p.add_scalar("mu_phi_" + std::to_string(n + 1) + std::to_string(k + 1));
        p.add_lmi(build_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), inter, cfg.sigma2(n, k), mu, h,
                            link_shape(unc, channels, n, n, k)));
      }
    }
  }
  for (int n = 0; n < n_cells; ++n) {
    std::vector<std::size_t> blocks;
    for (int i = 0; i < k_users; ++i) blocks.push_back(block_of(cfg, n, i));
    for (int m = 0; m < n_cells; ++m) {
      if (m == n) continue;
      for (int k = 0; k < k_users; ++k) {
        const auto v = v_idx[channels.index(n, m, k)];
        const auto& h = channels.h(n, m, k);
        if (unc.exact(channels, n, m, k)) {
          p.add_constraint(nominal_psi(blocks, v, 0.0, h));
        } else {
          const auto mu =
              p.add_scalar("mu_psi_" + std::to_string(n + 1) + std::to_string(m + 1) + std::to_string(k + 1));
          p.add_lmi(build_psi(blocks, v, 0.0, mu, h, link_shape(unc, channels, n, m, k)));
        }
      }
    }
  }
  return p;
}

Eigen::MatrixXd verify_robust_sinr(const FdBeamformers& bf, const ChannelSet& channels, const UncertaintyModel& unc,
                                   const SystemConfig& cfg) {
  Eigen::MatrixXd margin(bf.cells, bf.users);
  const auto nt = channels.antennas();
  std::vector<CMatrix> cov(static_cast<std::size_t>(bf.cells), CMatrix::Zero(nt, nt));
  for (int m = 0; m < bf.cells; ++m) {
    for (int i = 0; i < bf.users; ++i) cov[static_cast<std::size_t>(m)] += bf.at(m, i) * bf.at(m, i).adjoint();
  }
  for (int n = 0; n < bf.cells; ++n) {
    for (int k = 0; k < bf.users; ++k) {
      double d = cfg.sigma2(n, k);
      for (int m = 0; m < bf.cells; ++m) {
        if (m != n) {
          d += worst_case_quadratic(channels.h(m, n, k), cov[static_cast<std::size_t>(m)],
                                    link_shape(unc, channels, m, n, k));
        }
      }
      const CMatrix sig = bf.at(n, k) * bf.at(n, k).adjoint();
      const CMatrix intra = cov[static_cast<std::size_t>(n)] - sig;
      const auto shape = link_shape(unc, channels, n, n, k);
      const auto& h = channels.h(n, n, k);
      // f(t) = min (h+xi)^H (sig - t intra) (h+xi) - t d is decreasing in t.
      auto f = [&](double t) { return best_case_quadratic(h, sig - t * intra, shape) - t * d; };
      double lo = 0.0;
      double hi = worst_case_quadratic(h, sig, shape) / d;
      if (f(0.0) <= 0.0) {
        hi = 0.0;
      } else if (f(hi) >= 0.0) {
        lo = hi;
      }
      for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      margin(n, k) = lo - cfg.gamma(n, k);
    }
  }
  return margin;
}

double sampled_min_margin(const FdBeamformers& bf, const ChannelSet& channels, const UncertaintyModel& unc,
                          const SystemConfig& cfg, int samples, Rng& rng) {
  double worst = std::numeric_limits<double>::infinity();
  const auto nt = channels.antennas();
  for (int s = 0; s < samples; ++s) {
    ChannelSet pert = channels;
    for (int m = 0; m < channels.cells(); ++m) {
      for (int n = 0; n < channels.cells(); ++n) {
        for (int k = 0; k < channels.users(); ++k) {
          const auto shape = link_shape(unc, channels, m, n, k);
          if (shape.q == 0.0) continue;
          CVector u = ball_sample(static_cast<int>(nt), 1.0, rng);
          if (shape.p.isIdentity(0.0)) {
            pert.h(m, n, k) += std::sqrt(shape.q) * u;
          } else {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(shape.p);
            pert.h(m, n, k) += es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                               (es.eigenvectors().adjoint() * u);
          }
        }
      }
    }
    const auto sinr = metrics::sinr(bf, pert, cfg);
    for (int n = 0; n < bf.cells; ++n) {
      for (int k = 0; k < bf.users; ++k) worst = std::min(worst, sinr(n, k) - cfg.gamma(n, k));
    }
  }
  return worst;
}

centralized::MarginFn robust_margin(const ChannelSet& channels, const SystemConfig& cfg, const UncertaintyModel& unc) {
  return [&channels, &cfg, &unc](const FdBeamformers& bf) {
    const auto nt = channels.antennas();
    Eigen::MatrixXd a(bf.cells, bf.users);
    std::vector<CMatrix> cov(static_cast<std::size_t>(bf.cells), CMatrix::Zero(nt, nt));
    for (int m = 0; m < bf.cells; ++m) {
      for (int i = 0; i < bf.users; ++i) cov[static_cast<std::size_t>(m)] += bf.at(m, i) * bf.at(m, i).adjoint();
    }
    for (int n = 0; n < bf.cells; ++n) {
      for (int k = 0; k < bf.users; ++k) {
        const CMatrix sig = bf.at(n, k) * bf.at(n, k).adjoint();
        const CMatrix m_nk = sig / cfg.gamma(n, k) - (cov[static_cast<std::size_t>(n)] - sig);
        double v = best_case_quadratic(channels.h(n, n, k), m_nk, link_shape(unc, channels, n, n, k));
        for (int m = 0; m < bf.cells; ++m) {
          if (m != n) {
            v -= worst_case_quadratic(channels.h(m, n, k), cov[static_cast<std::size_t>(m)],
                                      link_shape(unc, channels, m, n, k));
          }
        }
        a(n, k) = v;
      }
    }
    return a;
  };
}

RobustSolution solve_robust_centralized(const ChannelSet& channels, const SystemConfig& cfg,
                                        const UncertaintyModel& unc, const conic::SolverOptions& solver,
                                        const centralized::ExtractOptions& extract) {
  RobustSolution res;
  check(channels, cfg, unc);
  const auto red = reduce(channels, cfg, unc);
  const auto prob = red ? build_robust_problem(red->channels, red->cfg, unc) : build_robust_problem(channels, cfg, unc);
  auto sol = conic::solve_sdp(prob, solver);
  if (red) {
    for (std::size_t j = 0; j < sol.blocks.size(); ++j) {
      sol.blocks[j] = red->lift(static_cast<int>(j) / cfg.users, sol.blocks[j]);
    }
  }
  res.status = sol.status;
  if (sol.status == conic::SolveStatus::Infeasible) {
    res.outcome = centralized::Outcome::Infeasible;
    return res;
  }
  if (sol.status != conic::SolveStatus::Optimal) return res;
  res.objective = sol.objective;
  res.blocks = sol.blocks;
  // Multipliers are stored as mu; the reported lambda is mu * q. The walk below
  // matches the order in which build_robust_problem adds them.
  std::vector<double> q;
  for (int n = 0; n < cfg.cells; ++n) {
    for (int k = 0; k < cfg.users; ++k) {
      if (!unc.exact(channels, n, n, k)) q.push_back(link_shape(unc, channels, n, n, k).q);
    }
  }
  for (int n = 0; n < cfg.cells; ++n) {
    for (int m = 0; m < cfg.cells; ++m) {
      if (m == n) continue;
      for (int k = 0; k < cfg.users; ++k) {
        if (!unc.exact(channels, n, m, k)) q.push_back(link_shape(unc, channels, n, m, k).q);
      }
    }
  }
  std::size_t next = 0;
  const auto& scalars = prob.scalars();
  for (std::size_t s = 0; s < scalars.size(); ++s) {
    if (scalars[s].name.rfind("mu_", 0) == 0) res.multipliers.push_back(sol.scalars[s] * q[next++]);
  }
  Rng rng(derive_seed(cfg.seed, {0x7b3u}));
  try {
    auto bf = centralized::extract_beamformers(sol.blocks, cfg, robust_margin(channels, cfg, unc), rng, extract);
    bf.sinr = metrics::sinr(bf, channels, cfg);
    res.margins = verify_robust_sinr(bf, channels, unc, cfg);
    res.beamformers = std::move(bf);
    res.outcome = centralized::Outcome::Feasible;
  } catch (const ExtractionFailed&) {
    res.outcome = centralized::Outcome::ExtractionFailed;
  }
  return res;
}

conic::SdpProblem build_robust_local_problem(const sdbf::BsLocalState& state, const ChannelSet& channels,
                                             const SystemConfig& cfg, const ici::IciLayout& layout,
                                             const UncertaintyModel& unc) {
  check(channels, cfg, unc);
  const int n = state.n;
  const int k_users = cfg.users;
  const int dim = layout.local_dim();
  if (state.c <= 0.0) throw InvalidDimensions("ADMM penalty must be positive");
  conic::SdpProblem p;
  std::vector<std::size_t> blocks;
  for (int k = 0; k < k_users; ++k) {
    blocks.push_back(p.add_block("G_" + std::to_string(n + 1) + std::to_string(k + 1),
                                 static_cast<std::size_t>(cfg.antennas), cfg.beta(n)));
  }
  std::vector<std::size_t> v(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] = p.add_scalar("v" + std::to_string(j), -state.nu(j));
  const auto t = p.add_scalar("t", 1.0);

  for (int k = 0; k < k_users; ++k) {
    const std::vector<std::size_t> inter = {v[static_cast<std::size_t>(layout.local_sum_index(k))]};
    const auto& h = channels.h(n, n, k);
    if (unc.exact(channels, n, n, k)) {
      p.add_constraint(nominal_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), inter, cfg.sigma2(n, k), h));
    } else {
      const auto mu = p.add_scalar("mu_phi_" + std::to_string(k + 1));
      p.add_lmi(build_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), inter, cfg.sigma2(n, k), mu, h,
                          link_shape(unc, channels, n, n, k)));
    }
  }
  for (int m = 0; m < cfg.cells; ++m) {
    if (m == n) continue;
    for (int k = 0; k < k_users; ++k) {
      const auto vi = v[static_cast<std::size_t>(layout.local_out_index(n, m, k))];
      const auto& h = channels.h(n, m, k);
      if (unc.exact(channels, n, m, k)) {
        p.add_constraint(nominal_psi(blocks, vi, 0.0, h));
      } else {
        const auto mu = p.add_scalar("mu_psi_" + std::to_string(m + 1) + std::to_string(k + 1));
        p.add_lmi(build_psi(blocks, vi, 0.0, mu, h, link_shape(unc, channels, n, m, k)));
      }
    }
  }

  const Eigen::VectorXd a = layout.w(n) * state.v_tilde;
  conic::LmiConstraint lmi;
  lmi.constant = CMatrix::Zero(dim + 1, dim + 1);
  lmi.constant.topLeftCorner(dim, dim).diagonal().setConstant(2.0 / state.c);
  lmi.constant.col(dim).head(dim) = a.cast<std::complex<double>>();
  lmi.constant.row(dim).head(dim) = a.transpose().cast<std::complex<double>>();
  for (int j = 0; j < dim; ++j) {
    CMatrix e = CMatrix::Zero(dim + 1, dim + 1);
    e(j, dim) = -1.0;
    e(dim, j) = -1.0;
    lmi.scalars.push_back({v[static_cast<std::size_t>(j)], e});
  }
  lmi.scalars.push_back({t, corner(dim + 1)});
  lmi.label = "tracking";
  p.add_lmi(std::move(lmi));
  return p;
}

sdbf::LocalResult solve_robust_local(const sdbf::BsLocalState& state, const ChannelSet& channels,
                                     const SystemConfig& cfg, const ici::IciLayout& layout,
                                     const UncertaintyModel& unc, const conic::SolverOptions& solver) {
  const auto red = reduce(channels, cfg, unc);
  const auto prob = red ? build_robust_local_problem(state, red->channels, red->cfg, layout, unc)
                        : build_robust_local_problem(state, channels, cfg, layout, unc);
  auto sol = conic::solve_sdp(prob, solver);
  if (red) {
    for (auto& b : sol.blocks) b = red->lift(state.n, b);
  }
  sdbf::LocalResult r;
  r.status = sol.status;
  if (sol.status != conic::SolveStatus::Optimal) {
    r.v_n = state.v_n;
    r.blocks = state.blocks;
  } else {
    r.feasible = true;
    r.v_n = Eigen::Map<const Eigen::VectorXd>(sol.scalars.data(), layout.local_dim());
    r.blocks = sol.blocks;
  }
  for (const auto& b : r.blocks) r.power += b.trace().real();
  return r;
}

namespace {

Recovery recovery_in(int n, const Eigen::VectorXd& v, const ChannelSet& channels, const SystemConfig& cfg,
                     const ici::IciLayout& layout, const UncertaintyModel& unc, const conic::SolverOptions& solver) {
  const Eigen::VectorXd vn = layout.w(n) * v;
  conic::SdpProblem p;
  std::vector<std::size_t> blocks;
  for (int k = 0; k < cfg.users; ++k) {
    blocks.push_back(p.add_block("G_" + std::to_string(n + 1) + std::to_string(k + 1),
                                 static_cast<std::size_t>(cfg.antennas), cfg.beta(n)));
  }
  for (int k = 0; k < cfg.users; ++k) {
    const auto& h = channels.h(n, n, k);
    const double constant = cfg.sigma2(n, k) + std::max(vn(layout.local_sum_index(k)), 0.0);
    if (unc.exact(channels, n, n, k)) {
      p.add_constraint(nominal_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), {}, constant, h));
    } else {
      const auto mu = p.add_scalar("mu_phi_" + std::to_string(k + 1));
      p.add_lmi(build_phi(blocks, static_cast<std::size_t>(k), cfg.gamma(n, k), {}, constant, mu, h,
                          link_shape(unc, channels, n, n, k)));
    }
  }
  for (int m = 0; m < cfg.cells; ++m) {
    if (m == n) continue;
    for (int k = 0; k < cfg.users; ++k) {
      const double budget = std::max(vn(layout.local_out_index(n, m, k)), 0.0);
      const auto& h = channels.h(n, m, k);
      if (unc.exact(channels, n, m, k)) {
        p.add_constraint(nominal_psi(blocks, std::nullopt, budget, h));
      } else {
        const auto mu = p.add_scalar("mu_psi_" + std::to_string(m + 1) + std::to_string(k + 1));
        p.add_lmi(build_psi(blocks, std::nullopt, budget, mu, h, link_shape(unc, channels, n, m, k)));
      }
    }
  }
  const auto sol = conic::solve_sdp(p, solver);
  Recovery r;
  if (sol.status != conic::SolveStatus::Optimal) return r;
  r.feasible = true;
  r.blocks = sol.blocks;
  for (const auto& b : r.blocks) r.power += b.trace().real();
  return r;
}

}  // namespace

Recovery feasibility_recovery(int n, const Eigen::VectorXd& v, const ChannelSet& channels, const SystemConfig& cfg,
                              const ici::IciLayout& layout, const UncertaintyModel& unc,
                              const conic::SolverOptions& solver) {
  check(channels, cfg, unc);
  const auto red = reduce(channels, cfg, unc);
  if (!red) return recovery_in(n, v, channels, cfg, layout, unc, solver);
  auto r = recovery_in(n, v, red->channels, red->cfg, layout, unc, solver);
  for (auto& b : r.blocks) b = red->lift(n, b);
  return r;
}

sdbf::Finalizer recovery_finalizer(const ChannelSet& channels, const SystemConfig& cfg, const ici::IciLayout& layout,
                                   const UncertaintyModel& unc, const conic::SolverOptions& solver) {
  return [&channels, &cfg, &layout, &unc, solver](const Eigen::VectorXd& v,
                                                  const std::vector<sdbf::LocalResult>&) -> std::optional<FdBeamformers> {
    std::vector<CMatrix> blocks;
    for (int n = 0; n < cfg.cells; ++n) {
      auto r = feasibility_recovery(n, v, channels, cfg, layout, unc, solver);
      if (!r.feasible) return std::nullopt;
      for (auto& b : r.blocks) blocks.push_back(std::move(b));
    }
    Rng rng(derive_seed(cfg.seed, {0x7ecu}));
    try {
      auto bf = centralized::extract_beamformers(blocks, cfg, robust_margin(channels, cfg, unc), rng);
      bf.sinr = metrics::sinr(bf, channels, cfg);
      return bf;
    } catch (const ExtractionFailed&) {
      return std::nullopt;
    }
  };
}

metrics::ExperimentTrace run_robust_sdbf(const ChannelSet& channels, const SystemConfig& cfg,
                                         const UncertaintyModel& unc, const sdbf::AdmmOptions& opt) {
  check(channels, cfg, unc);
  const ici::IciLayout layout(cfg.cells, cfg.users);
  const auto solver = opt.solver;
  sdbf::LocalSolver solve = [&](const sdbf::BsLocalState& s) {
    return solve_robust_local(s, channels, cfg, layout, unc, solver);
  };
  return sdbf::run_admm(cfg, layout, solve, recovery_finalizer(channels, cfg, layout, unc, solver), opt);
}

metrics::ExperimentTrace run_robust_adbf(const ChannelSet& channels, const SystemConfig& cfg,
                                         const UncertaintyModel& unc, const adbf::AsyncConfig& async,
                                         const adbf::AsyncOptions& opt) {
  check(channels, cfg, unc);
  const ici::IciLayout layout(cfg.cells, cfg.users);
  const auto solver = opt.solver;
  sdbf::LocalSolver solve = [&](const sdbf::BsLocalState& s) {
    return solve_robust_local(s, channels, cfg, layout, unc, solver);
  };
  return adbf::run_async(cfg, layout, solve, recovery_finalizer(channels, cfg, layout, unc, solver), async, opt);
}

}  // namespace mccbf::robust
