// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_GENERATOR_HPP_
#define MARKOVBSDE_GENERATOR_HPP_

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/grid.hpp"

namespace mbsde {

// 1-D central differences on a non-uniform grid; first and last rows are zero.
SparseMatrix build_d1(const Grid1D& grid);
SparseMatrix build_d2(const Grid1D& grid);

// Per-axis difference operators placed into the flattened tensor space.
struct DifferenceSet {
  TensorGrid grid;
  std::vector<SparseMatrix> d1;
  std::vector<SparseMatrix> d2;
  // (p, q) with p < q: placed D1 along p times placed D1 along q.
  std::map<std::pair<int, int>, SparseMatrix> cross;
};

DifferenceSet build_differences(const TensorGrid& grid, bool with_cross = true);

using ScalarFn = std::function<double(double)>;
using DriftFn = std::function<Vector(const Vector&)>;
using DiffusionFn = std::function<Matrix(const Vector&)>;

struct Generator {
  SparseMatrix q;
  DifferenceSet differences;
  // Coefficients sampled at the nodes: drift (N x d) and diag(sigma sigma^*)
  // (N x d). Used by the sufficient step condition in 1-D.
  Matrix drift_at_nodes;
  Matrix variance_at_nodes;

  std::size_t dimension() const { return static_cast<std::size_t>(q.rows()); }
  const TensorGrid& grid() const { return differences.grid; }
};

Generator build_generator_1d(const Grid1D& grid, const ScalarFn& mu,
                             const ScalarFn& sigma);
Generator build_generator_nd(const TensorGrid& grid, const DriftFn& drift,
                             const DiffusionFn& diffusion);

struct Violation {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
  std::string kind;
};

struct ValidityReport {
  bool valid = true;                 // Q-matrix test on entries and row sums
  bool step_condition_checked = false;
  bool step_condition_holds = true;  // max dx <= min_{mu != 0} sigma^2/|mu|
  double max_spacing = 0.0;
  double step_bound = 0.0;           // +inf when mu vanishes at every node
  std::vector<Violation> violations;
};

ValidityReport check_validity(const SparseMatrix& q, double tol = 1e-12,
                              double row_tol = 1e-10);
ValidityReport check_validity(const Generator& gen, double tol = 1e-12,
                              double row_tol = 1e-10);

// Q_ji == 0 implies (D1 along p)_ji == 0 for every axis p, and every row of
// each placed D1 sums to zero.
bool check_structural_condition(const Generator& gen,
                                std::vector<Violation>* offending = nullptr);

// "row col value" per line, 0-based.
void write_coordinate(std::ostream& os, const SparseMatrix& m);

}  // namespace mbsde

#endif  // MARKOVBSDE_GENERATOR_HPP_
