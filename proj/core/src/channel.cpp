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

#include "mccbf/channel.hpp"

#include <Eigen/QR>

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace mccbf {

double SystemConfig::sigma2(int n, int k) const {
  return noise_nk.empty() ? noise : noise_nk[static_cast<std::size_t>(n * users + k)];
}

double SystemConfig::gamma(int n, int k) const {
  return target_nk.empty() ? sinr_target : target_nk[static_cast<std::size_t>(n * users + k)];
}

double SystemConfig::beta(int n) const { return weight_n.empty() ? 1.0 : weight_n[static_cast<std::size_t>(n)]; }

void SystemConfig::validate() const {
  if (cells < 1 || users < 1 || antennas < 1 || paths < 1 || dict_size < 1) {
    throw InvalidDimensions("N, K, N_t, L and G must all be at least 1");
  }
  if (n_rf() > antennas) throw InvalidDimensions("N_rf must not exceed N_t");
  if (!allow_large && (cells > 4 || users > 3 || antennas > 16 || dict_size > 64)) {
    throw InvalidDimensions("desk-scale limits are N<=4, K<=3, N_t<=16, G<=64 (set allow_large to exceed)");
  }
  const auto nk = static_cast<std::size_t>(cells * users);
  if (!noise_nk.empty() && noise_nk.size() != nk) throw InvalidDimensions("noise_nk needs N*K entries");
  if (!target_nk.empty() && target_nk.size() != nk) throw InvalidDimensions("target_nk needs N*K entries");
  if (!weight_n.empty() && weight_n.size() != static_cast<std::size_t>(cells)) {
    throw InvalidDimensions("weight_n needs N entries");
  }
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  bool ok = positive(noise) && positive(sinr_target) && positive(spacing);
  for (double v : noise_nk) ok = ok && positive(v);
  for (double v : target_nk) ok = ok && positive(v);
  for (double v : weight_n) ok = ok && positive(v);
  if (!ok) throw InvalidDimensions("noise, targets, weights and spacing must be positive");
}

ChannelSet::ChannelSet(int cells, int users, int antennas)
    : cells_(cells),
      users_(users),
      antennas_(antennas),
      h_(static_cast<std::size_t>(cells * cells * users), CVector::Zero(antennas)) {}

FdBeamformers::FdBeamformers(int n_cells, int n_users, int antennas)
    : cells(n_cells),
      users(n_users),
      g(static_cast<std::size_t>(n_cells * n_users), CVector::Zero(antennas)),
      rank_one(static_cast<std::size_t>(n_cells * n_users), true),
      sinr(Eigen::MatrixXd::Zero(n_cells, n_users)) {}

double FdBeamformers::bs_power(int n) const {
  double p = 0.0;
  for (int k = 0; k < users; ++k) p += at(n, k).squaredNorm();
  return p;
}

double FdBeamformers::total_power() const {
  double p = 0.0;
  for (int n = 0; n < cells; ++n) p += bs_power(n);
  return p;
}

double FdBeamformers::weighted_power(const SystemConfig& cfg) const {
  double p = 0.0;
  for (int n = 0; n < cells; ++n) p += cfg.beta(n) * bs_power(n);
  return p;
}

CVector array_response(double theta, int antennas, double spacing) {
  CVector a(antennas);
  const double phase = 2.0 * std::numbers::pi * spacing * std::sin(theta);
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  for (int p = 0; p < antennas; ++p) a(p) = std::polar(scale, phase * p);
  return a;
}

ChannelSet sample_channels(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n_cells = cfg.cells;
  ChannelSet ch(n_cells, cfg.users, cfg.antennas);
  ch.paths.resize(static_cast<std::size_t>(n_cells * n_cells * cfg.users));
  std::uniform_real_distribution<double> aod(0.0, 2.0 * std::numbers::pi);
  const double scale = std::sqrt(static_cast<double>(cfg.antennas) / cfg.paths);
  for (int m = 0; m < n_cells; ++m) {
    for (int n = 0; n < n_cells; ++n) {
      for (int k = 0; k < cfg.users; ++k) {
        auto& link = ch.paths[ch.index(m, n, k)];
        CVector h = CVector::Zero(cfg.antennas);
        for (int l = 0; l < cfg.paths; ++l) {
          const auto alpha = complex_normal(rng);
          const double theta = aod(rng);
          link.gains.push_back(alpha);
          link.aods.push_back(theta);
          h += alpha * array_response(theta, cfg.antennas, cfg.spacing);
        }
        ch.h(m, n, k) = scale * h;
      }
    }
  }
  return ch;
}

ChannelSet sample_channels(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return sample_channels(cfg, rng);
}

double dictionary_grid(int g, int dict_size) { return 2.0 * g / dict_size - 1.0; }

CMatrix build_dictionary(int dict_size, int antennas, double spacing) {
  CMatrix f(antennas, dict_size);
  for (int g = 0; g < dict_size; ++g) f.col(g) = array_response(std::asin(dictionary_grid(g, dict_size)), antennas, spacing);
  return f;
}

CVector ball_sample(int dim, double eps, Rng& rng) {
  if (eps <= 0.0) return CVector::Zero(dim);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  CVector d(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = nd(rng);
    const double im = nd(rng);
    d(i) = {re, im};
  }
  const double r = eps * std::pow(ud(rng), 1.0 / (2.0 * dim));
  return d * (r / d.norm());
}

ChannelSet perturb_channels(const ChannelSet& channels, double eps, Rng& rng) {
  ChannelSet out = channels;
  if (eps == 0.0) return out;
  for (int m = 0; m < channels.cells(); ++m) {
    for (int n = 0; n < channels.cells(); ++n) {
      for (int k = 0; k < channels.users(); ++k) out.h(m, n, k) += ball_sample(channels.antennas(), eps, rng);
    }
  }
  return out;
}

void write_channels_csv(const ChannelSet& channels, std::ostream& os) {
  const auto old = os.precision(17);
  os << "m,n,k,antenna,real,imag\n";
  for (int m = 0; m < channels.cells(); ++m) {
    for (int n = 0; n < channels.cells(); ++n) {
      for (int k = 0; k < channels.users(); ++k) {
        const auto& h = channels.h(m, n, k);
        for (Eigen::Index a = 0; a < h.size(); ++a) {
          os << m << ',' << n << ',' << k << ',' << a << ',' << h(a).real() << ',' << h(a).imag() << '\n';
        }
      }
    }
  }
  os.precision(old);
}

ChannelSet read_channels_csv(std::istream& is) {
  struct Rec {
    int m, n, k, a;
    double re, im;
  };
  std::vector<Rec> recs;
  std::string line;
  std::getline(is, line);
  int max_m = -1, max_n = -1, max_k = -1, max_a = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    for (auto& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    Rec r{};
    if (!(ls >> r.m >> r.n >> r.k >> r.a >> r.re >> r.im)) throw InvalidDimensions("malformed channel row: " + line);
    max_m = std::max(max_m, r.m);
    max_n = std::max(max_n, r.n);
    max_k = std::max(max_k, r.k);
    max_a = std::max(max_a, r.a);
    recs.push_back(r);
  }
  if (max_m != max_n || recs.size() != static_cast<std::size_t>((max_m + 1) * (max_n + 1) * (max_k + 1) * (max_a + 1))) {
    throw InvalidDimensions("channel CSV does not describe a complete set");
  }
  ChannelSet ch(max_m + 1, max_k + 1, max_a + 1);
  for (const auto& r : recs) ch.h(r.m, r.n, r.k)(r.a) = {r.re, r.im};
  return ch;
}

CMatrix ChannelSubspace::lift(int bs, const CMatrix& g) const {
  const auto& b = basis[static_cast<std::size_t>(bs)];
  return b * g * b.adjoint();
}

std::optional<ChannelSubspace> channel_subspace(const ChannelSet& channels, const SystemConfig& cfg) {
  const int nt = channels.antennas();
  const int d = channels.cells() * channels.users();
  if (d >= nt) return std::nullopt;
  ChannelSubspace r;
  r.cfg = cfg;
  r.cfg.antennas = d;
  r.channels = ChannelSet(channels.cells(), channels.users(), d);
  for (int m = 0; m < channels.cells(); ++m) {
    CMatrix h(nt, d);
    for (int n = 0; n < channels.cells(); ++n) {
      for (int k = 0; k < channels.users(); ++k) h.col(n * channels.users() + k) = channels.h(m, n, k);
    }
    // H = Q R, so the first d columns of Q contain range(H) even when H is rank deficient.
    Eigen::HouseholderQR<CMatrix> qr(h);
    r.basis.push_back(qr.householderQ() * CMatrix::Identity(nt, d));
    const CMatrix& b = r.basis.back();
    for (int n = 0; n < channels.cells(); ++n) {
      for (int k = 0; k < channels.users(); ++k) r.channels.h(m, n, k) = b.adjoint() * channels.h(m, n, k);
    }
  }
  return r;
}

}  // namespace mccbf
