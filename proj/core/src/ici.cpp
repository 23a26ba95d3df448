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

#include "mccbf/ici.hpp"

#include <Eigen/QR>

namespace mccbf::ici {

IciLayout::IciLayout(int cells, int users) : cells_(cells), users_(users) {
  if (cells < 2) throw InvalidDimensions("ICI layout needs at least two cells");
  if (users < 1) throw InvalidDimensions("ICI layout needs at least one user per cell");
  const int gd = global_dim();
  const int ld = local_dim();
  w_stack_ = Eigen::MatrixXd::Zero(cells * ld, gd);
  for (int n = 0; n < cells; ++n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(ld, gd);
    for (int k = 0; k < users; ++k) {
      for (int m = 0; m < cells; ++m) {
        if (m == n) continue;
        w(local_sum_index(k), global_index(m, n, k)) = 1.0;
        w(local_out_index(n, m, k), global_index(n, m, k)) = 1.0;
      }
    }
    w_stack_.middleRows(n * ld, ld) = w;
    w_.push_back(std::move(w));
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w_stack_);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(gd).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(w_stack_.rows(), gd);
  // W^+ = R^-1 Q^T for full column rank W.
  w_pinv_ = r.triangularView<Eigen::Upper>().solve(q.transpose());
}

int IciLayout::global_index(int m, int n, int k) const {
  const int slot = n < m ? n : n - 1;
  return (m * (cells_ - 1) + slot) * users_ + k;
}

int IciLayout::local_out_index(int n, int m, int k) const {
  const int slot = m < n ? m : m - 1;
  return users_ + slot * users_ + k;
}

Eigen::VectorXd IciLayout::stack(const std::vector<Eigen::VectorXd>& locals) const {
  Eigen::VectorXd s(cells_ * local_dim());
  for (int n = 0; n < cells_; ++n) s.segment(n * local_dim(), local_dim()) = locals[static_cast<std::size_t>(n)];
  return s;
}

Eigen::VectorXd compute_local_ici(int n, const std::vector<CVector>& g_n, const ChannelSet& channels,
                                  const IciLayout& layout) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.local_dim());
  for (int m = 0; m < layout.cells(); ++m) {
    if (m == n) continue;
    for (int k = 0; k < layout.users(); ++k) {
      double s = 0.0;
      for (const auto& g : g_n) s += std::norm(channels.h(n, m, k).dot(g));
      v(layout.local_out_index(n, m, k)) = s;
    }
  }
  return v;
}

}  // namespace mccbf::ici
