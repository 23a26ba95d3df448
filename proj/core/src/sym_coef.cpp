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

#include "standard_form.hpp"

#include <cmath>
#include <utility>

namespace mccbf::conic::detail {

SymCoef SymCoef::sparse(std::vector<Entry> entries) {
  SymCoef c;
  c.kind_ = Kind::Sparse;
  c.entries_ = std::move(entries);
  return c;
}

SymCoef SymCoef::low_rank(Eigen::MatrixXd factors, Eigen::VectorXd weights) {
  SymCoef c;
  c.kind_ = Kind::LowRank;
  c.factors_ = std::move(factors);
  c.weights_ = std::move(weights);
  return c;
}

SymCoef SymCoef::dense(Eigen::MatrixXd m) {
  SymCoef c;
  c.kind_ = Kind::Dense;
  c.dense_ = std::move(m);
  return c;
}

SymCoef SymCoef::lifted(std::shared_ptr<const Eigen::MatrixXd> lift, std::vector<Entry> inner) {
  const auto& l = *lift;
  const auto n = l.cols();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(l.rows(), l.rows());
  for (const auto& en : inner) {
    e(en.row, en.col) += en.value;
    if (en.row != en.col) e(en.col, en.row) += en.value;
  }
  const Eigen::MatrixXd a = l.transpose() * e * l;
  std::vector<Entry> entries;
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r <= c; ++r) {
      const double v = 0.5 * (a(r, c) + a(c, r));
      if (v != 0.0) entries.push_back({static_cast<int>(r), static_cast<int>(c), v});
    }
  }
  SymCoef out = sparse(std::move(entries));
  out.lift_ = std::move(lift);
  out.inner_ = std::move(inner);
  return out;
}

SymCoef SymCoef::from_matrix(const Eigen::MatrixXd& m, double drop) {
  const int n = static_cast<int>(m.rows());
  std::vector<Entry> entries;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) {
      const double v = 0.5 * (m(r, c) + m(c, r));
      if (std::abs(v) > drop) entries.push_back({r, c, v});
    }
  }
  if (static_cast<int>(entries.size()) <= 2 * n) return sparse(std::move(entries));
  return dense(0.5 * (m + m.transpose()));
}

double SymCoef::dot(const Eigen::MatrixXd& d) const {
  double s = 0.0;
  switch (kind_) {
    case Kind::Sparse:
      for (const auto& e : entries_) {
        s += e.row == e.col ? e.value * d(e.row, e.col)
                            : e.value * (d(e.row, e.col) + d(e.col, e.row));
      }
      return s;
    case Kind::LowRank:
      for (Eigen::Index k = 0; k < factors_.cols(); ++k) {
        s += weights_(k) * factors_.col(k).dot(d * factors_.col(k));
      }
      return s;
    case Kind::Dense:
      return dense_.cwiseProduct(d).sum();
  }
  return s;
}

void SymCoef::add_to(Eigen::MatrixXd& acc, double scale) const {
  switch (kind_) {
    case Kind::Sparse:
      for (const auto& e : entries_) {
        acc(e.row, e.col) += scale * e.value;
        if (e.row != e.col) acc(e.col, e.row) += scale * e.value;
      }
      return;
    case Kind::LowRank:
      acc.noalias() += factors_ * (scale * weights_).asDiagonal() * factors_.transpose();
      return;
    case Kind::Dense:
      acc += scale * dense_;
      return;
  }
}

void SymCoef::sandwich(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       Eigen::MatrixXd& out) const {
  switch (kind_) {
    case Kind::Sparse:
      for (const auto& e : entries_) {
        out.noalias() += e.value * x.col(e.row) * y.row(e.col);
        if (e.row != e.col) out.noalias() += e.value * x.col(e.col) * y.row(e.row);
      }
      return;
    case Kind::LowRank: {
      const Eigen::MatrixXd xu = x * factors_;
      const Eigen::MatrixXd uy = factors_.transpose() * y;
      out.noalias() += xu * weights_.asDiagonal() * uy;
      return;
    }
    case Kind::Dense:
      out.noalias() += x * dense_ * y;
      return;
  }
}

const std::vector<SymCoef::Entry>* SymCoef::core() const {
  if (lift_) return &inner_;
  if (kind_ == Kind::Sparse && entries_.size() <= 4) return &entries_;
  return nullptr;
}

double SymCoef::frob2() const {
  double s = 0.0;
  switch (kind_) {
    case Kind::Sparse:
      for (const auto& e : entries_) s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      return s;
    case Kind::LowRank: {
      const Eigen::MatrixXd p = factors_.transpose() * factors_;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
          s += weights_(i) * weights_(j) * p(i, j) * p(i, j);
        }
      }
      return s;
    }
    case Kind::Dense:
      return dense_.squaredNorm();
  }
  return s;
}

double SymCoef::sandwich_cost(int n) const {
  const double n2 = static_cast<double>(n) * n;
  switch (kind_) {
    case Kind::Sparse: {
      double c = 0.0;
      for (const auto& e : (lift_ ? inner_ : entries_)) c += e.row == e.col ? 1.0 : 2.0;
      return c * n2;
    }
    case Kind::LowRank:
      return 3.0 * n2 * static_cast<double>(factors_.cols());
    case Kind::Dense:
      return 4.0 * n2 * n;
  }
  return 0.0;
}

double SymCoef::dot_cost(int n) const {
  const double n2 = static_cast<double>(n) * n;
  switch (kind_) {
    case Kind::Sparse:
      return static_cast<double>(entries_.size());
    case Kind::LowRank:
      return n2 * static_cast<double>(factors_.cols());
    case Kind::Dense:
      return n2;
  }
  return 0.0;
}

void SymCoef::scale(double s) {
  for (auto& e : entries_) e.value *= s;
  for (auto& e : inner_) e.value *= s;
  weights_ *= s;
  dense_ *= s;
}

Eigen::MatrixXd SymCoef::to_dense(int n) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  add_to(m, 1.0);
  return m;
}

}  // namespace mccbf::conic::detail
