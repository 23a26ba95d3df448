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

// Real standard-form SDP used internally by the conic solver:
//   min <C, X>  s.t.  <A_i, X> = b_i,  X in PSD blocks x nonnegative orthant.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace mccbf::conic::detail {

// Symmetric coefficient matrix of one row on one PSD block.
class SymCoef {
 public:
  enum class Kind { Sparse, LowRank, Dense };

  struct Entry {
    int row;
    int col;  // row <= col; off-diagonal values apply to both halves
    double value;
  };

  static SymCoef sparse(std::vector<Entry> entries);
  static SymCoef low_rank(Eigen::MatrixXd factors, Eigen::VectorXd weights);
  static SymCoef dense(Eigen::MatrixXd m);
  // Sparse or dense, whichever is cheaper to apply.
  static SymCoef from_matrix(const Eigen::MatrixXd& m, double drop = 0.0);
  // A = L^T E L with a sparse inner E; also stored expanded for dot and add_to.
  static SymCoef lifted(std::shared_ptr<const Eigen::MatrixXd> lift, std::vector<Entry> inner);

  Kind kind() const { return kind_; }

  // Elementwise inner product with d (d need not be symmetric).
  double dot(const Eigen::MatrixXd& d) const;
  // acc += scale * A
  void add_to(Eigen::MatrixXd& acc, double scale) const;
  // out += X A Y
  void sandwich(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::MatrixXd& out) const;
  // Small core E with A = L^T E L, L = I when lift() is null; null if A has no such form.
  const std::vector<Entry>* core() const;
  const Eigen::MatrixXd* lift() const { return lift_.get(); }
  double frob2() const;
  // Rough flop counts used to pick an evaluation order.
  double sandwich_cost(int n) const;
  double dot_cost(int n) const;
  void scale(double s);
  Eigen::MatrixXd to_dense(int n) const;

 private:
  Kind kind_ = Kind::Sparse;
  std::vector<Entry> entries_;
  Eigen::MatrixXd factors_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd dense_;
  std::shared_ptr<const Eigen::MatrixXd> lift_;
  std::vector<Entry> inner_;
};

struct Row {
  std::vector<std::pair<std::size_t, SymCoef>> blocks;
  std::vector<std::pair<std::size_t, double>> lp;
  double rhs = 0.0;
};

struct StandardForm {
  std::vector<int> block_sizes;
  std::size_t lp_dim = 0;
  std::vector<Eigen::MatrixXd> cost_blocks;
  Eigen::VectorXd cost_lp;
  std::vector<Row> rows;
};

enum class IpmStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };

struct IpmResult {
  IpmStatus status = IpmStatus::MaxIter;
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> z;
  Eigen::VectorXd x_lp;
  Eigen::VectorXd z_lp;
  Eigen::VectorXd y;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

IpmResult solve_standard(const StandardForm& sf, double tol, int max_iter);

}  // namespace mccbf::conic::detail
