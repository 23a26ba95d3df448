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

// Small-scale semidefinite programming over complex Hermitian blocks.
//
// Problems are stated with Hermitian PSD blocks, nonnegative real scalars,
// trace-linear constraints and Hermitian LMIs. The solver reduces them to a
// real standard-form SDP and runs a homogeneous self-dual interior-point
// method with the HKM direction and Mehrotra predictor-corrector steps.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace mccbf::conic {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

class NonHermitianInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Sense { GreaterEqual, LessEqual, Equal };

// weight * v^H X v
struct RankOneTerm {
  std::size_t block = 0;
  double weight = 1.0;
  CVector vec;
};

// Tr(coef X), coef Hermitian
struct MatrixTerm {
  std::size_t block = 0;
  CMatrix coef;
};

struct ScalarTerm {
  std::size_t scalar = 0;
  double coef = 0.0;
};

struct TraceConstraint {
  std::vector<RankOneTerm> rank_one;
  std::vector<MatrixTerm> matrix;
  std::vector<ScalarTerm> scalars;
  Sense sense = Sense::GreaterEqual;
  double rhs = 0.0;
  std::string label;
};

// weight * Q^H X Q, with Q of shape (block side) x (LMI side)
struct CongruenceTerm {
  std::size_t block = 0;
  double weight = 1.0;
  CMatrix map;
};

// scalar * coef, coef Hermitian of LMI side
struct LmiScalarTerm {
  std::size_t scalar = 0;
  CMatrix coef;
};

// constant + sum(block terms) + sum(scalar terms) is PSD
struct LmiConstraint {
  CMatrix constant;
  std::vector<CongruenceTerm> blocks;
  std::vector<LmiScalarTerm> scalars;
  std::string label;
};

class SdpProblem {
 public:
  std::size_t add_block(std::string name, std::size_t side, double trace_cost = 0.0);
  std::size_t add_scalar(std::string name, double cost = 0.0);
  void set_block_cost(std::size_t block, double trace_cost);
  void set_scalar_cost(std::size_t scalar, double cost);
  void add_constraint(TraceConstraint c);
  void add_lmi(LmiConstraint lmi);

  // Throws DimensionMismatch or NonHermitianInput.
  void validate() const;

  struct Block {
    std::string name;
    std::size_t side = 0;
    double trace_cost = 0.0;
  };
  struct Scalar {
    std::string name;
    double cost = 0.0;
  };

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Scalar>& scalars() const { return scalars_; }
  const std::vector<TraceConstraint>& constraints() const { return constraints_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }

 private:
  std::vector<Block> blocks_;
  std::vector<Scalar> scalars_;
  std::vector<TraceConstraint> constraints_;
  std::vector<LmiConstraint> lmis_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(SolveStatus s);

enum class Reduction { Auto, Primal, Dual };

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 200;
  Reduction reduction = Reduction::Auto;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::MaxIter;
  std::vector<CMatrix> blocks;
  std::vector<double> scalars;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  Reduction reduction_used = Reduction::Primal;
};

SdpSolution solve_sdp(const SdpProblem& problem, const SolverOptions& options = {});
SdpSolution solve_sdp(const SdpProblem& problem, double tol, int max_iter);

struct PrincipalPair {
  double eigenvalue = 0.0;
  CVector eigenvector;
};

// Largest eigenpair of a Hermitian matrix. Among tied largest eigenvalues
// the lowest eigensolver index wins; the first non-negligible eigenvector
// entry is made real and positive. The zero matrix yields (0, e_0).
PrincipalPair extract_principal(const CMatrix& m);

// One line per nonzero: constraint-id var-id row col real imag.
// Constraint 0 is the objective; LMIs follow the trace constraints.
void write_triplets(const SdpProblem& problem, std::ostream& os);

bool is_hermitian(const CMatrix& m, double tol = 1e-9);

}  // namespace mccbf::conic
