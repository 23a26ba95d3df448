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

// System configuration, geometric mmWave channels, ULA steering vectors and
// the angular dictionary.

#pragma once

#include "mccbf/errors.hpp"
#include "mccbf/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mccbf {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct SystemConfig {
  int cells = 2;          // N
  int users = 2;          // K per cell
  int antennas = 16;      // N_t
  int rf_chains = 0;      // N_rf per BS; 0 means K
  int paths = 3;          // L
  int dict_size = 64;     // G
  double spacing = 0.5;   // d / lambda
  double noise = 1.0;     // sigma^2 for every user unless overridden
  double sinr_target = 10.0;  // gamma (linear) for every user unless overridden
  std::vector<double> noise_nk;   // optional, size N*K
  std::vector<double> target_nk;  // optional, size N*K
  std::vector<double> weight_n;   // optional beta_n, size N
  std::uint64_t seed = 1;
  bool allow_large = false;

  int n_rf() const { return rf_chains > 0 ? rf_chains : users; }
  double sigma2(int n, int k) const;
  double gamma(int n, int k) const;
  double beta(int n) const;
  // Throws InvalidDimensions.
  void validate() const;
};

class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(int cells, int users, int antennas);

  int cells() const { return cells_; }
  int users() const { return users_; }
  int antennas() const { return antennas_; }

  // Channel from BS m to user k of cell n.
  CVector& h(int m, int n, int k) { return h_[index(m, n, k)]; }
  const CVector& h(int m, int n, int k) const { return h_[index(m, n, k)]; }

  struct Paths {
    std::vector<std::complex<double>> gains;
    std::vector<double> aods;
  };
  // Per-link path parameters, empty unless produced by sample_channels.
  std::vector<Paths> paths;

  std::size_t index(int m, int n, int k) const {
    return (static_cast<std::size_t>(m) * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(n)) *
               static_cast<std::size_t>(users_) +
           static_cast<std::size_t>(k);
  }

 private:
  int cells_ = 0;
  int users_ = 0;
  int antennas_ = 0;
  std::vector<CVector> h_;
};

// Fully-digital beamformers g_nk with bookkeeping.
struct FdBeamformers {
  int cells = 0;
  int users = 0;
  std::vector<CVector> g;      // index n*K + k
  std::vector<bool> rank_one;  // per (n, k)
  Eigen::MatrixXd sinr;        // N x K, on the channels used to design

  FdBeamformers() = default;
  FdBeamformers(int n_cells, int n_users, int antennas);

  CVector& at(int n, int k) { return g[static_cast<std::size_t>(n * users + k)]; }
  const CVector& at(int n, int k) const { return g[static_cast<std::size_t>(n * users + k)]; }
  double bs_power(int n) const;
  double total_power() const;
  double weighted_power(const SystemConfig& cfg) const;
};

CVector array_response(double theta, int antennas, double spacing = 0.5);

ChannelSet sample_channels(const SystemConfig& cfg, Rng& rng);
ChannelSet sample_channels(const SystemConfig& cfg, std::uint64_t seed);

// Grid value of column g (0-based): 2g/G - 1.
double dictionary_grid(int g, int dict_size);
// Column g steers to the angle whose sine is dictionary_grid(g), so the
// columns form a uniform grid in spatial frequency.
CMatrix build_dictionary(int dict_size, int antennas, double spacing = 0.5);

// Uniform draw from the complex ball of radius eps.
CVector ball_sample(int dim, double eps, Rng& rng);
ChannelSet perturb_channels(const ChannelSet& channels, double eps, Rng& rng);

// Per-BS orthonormal bases (N_t x NK) containing every channel leaving that BS,
// with the channels expressed in them. Beamforming problems whose constraints
// see the blocks of BS m only through h_mnk (and isotropic balls around them)
// have an optimum of the form B_m G B_m^H, so they can be solved in NK dimensions.
struct ChannelSubspace {
  std::vector<CMatrix> basis;
  ChannelSet channels;
  SystemConfig cfg;

  CMatrix lift(int bs, const CMatrix& g) const;
};

// Empty when NK >= N_t, where nothing is gained.
std::optional<ChannelSubspace> channel_subspace(const ChannelSet& channels, const SystemConfig& cfg);

void write_channels_csv(const ChannelSet& channels, std::ostream& os);
ChannelSet read_channels_csv(std::istream& is);

}  // namespace mccbf
