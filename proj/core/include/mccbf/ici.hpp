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

// Index algebra for the inter-cell interference variables.
//
// Global vector v stacks v_mnk (interference from BS m on user k of cell n)
// ordered by m, then n != m ascending, then k. BS n's local vector is
// [V_n1..V_nK, v_nmk for m != n ascending, k], with V_nk = sum_{m != n} v_mnk.

#pragma once

#include "mccbf/channel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mccbf::ici {

class IciLayout {
 public:
  // Throws InvalidDimensions for N < 2 or K < 1.
  IciLayout(int cells, int users);

  int cells() const { return cells_; }
  int users() const { return users_; }
  int global_dim() const { return cells_ * (cells_ - 1) * users_; }
  int local_dim() const { return cells_ * users_; }

  int global_index(int m, int n, int k) const;
  // Position of V_nk in v_n.
  int local_sum_index(int k) const { return k; }
  // Position of v_nmk in v_n (m != n).
  int local_out_index(int n, int m, int k) const;

  const Eigen::MatrixXd& w(int n) const { return w_[static_cast<std::size_t>(n)]; }
  const Eigen::MatrixXd& w_stack() const { return w_stack_; }
  const Eigen::MatrixXd& w_pinv() const { return w_pinv_; }

  Eigen::VectorXd local_view(int n, const Eigen::VectorXd& v) const { return w(n) * v; }
  Eigen::VectorXd stack(const std::vector<Eigen::VectorXd>& locals) const;

 private:
  int cells_;
  int users_;
  std::vector<Eigen::MatrixXd> w_;
  Eigen::MatrixXd w_stack_;
  Eigen::MatrixXd w_pinv_;
};

// v_nmk = sum_i |h_nmk^H g_ni|^2 for m != n; V_nk slots are left at zero.
Eigen::VectorXd compute_local_ici(int n, const std::vector<CVector>& g_n, const ChannelSet& channels,
                                  const IciLayout& layout);

}  // namespace mccbf::ici
