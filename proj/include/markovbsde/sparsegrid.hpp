// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_SPARSEGRID_HPP_
#define MARKOVBSDE_SPARSEGRID_HPP_

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/integrators.hpp"

namespace mbsde {

using LevelIndex = std::vector<int>;

// Levels l (l_p >= 1) with q - d + 1 <= |l| <= q, ordered by |l| descending
// then lexicographically.
std::vector<LevelIndex> enumerate_levels(int q, int d);

// (-1)^(q - |l|) * binom(d - 1, q - |l|).
long combination_coefficient(int q, int d, const LevelIndex& level);

long count_points(int q, int d,
                  const std::function<long(int)>& axis_size = nullptr);

// Builds the level-l grid of one axis (2^l + 1 nodes).
using AxisFamily = std::function<Grid1D(int level)>;

double interpolate(const TensorGrid& grid, const Vector& values,
                   const std::vector<double>& point);

// Per-member problem: the factory owns whatever the nonlinearity captures.
struct MemberProblem {
  std::shared_ptr<void> storage;
  BackwardProblem problem;
};
using ProblemFactory = std::function<MemberProblem(const TensorGrid&)>;

struct CombinationMember {
  LevelIndex level;
  long coefficient = 0;
  TensorGrid grid;
  Trajectory trajectory;
};

struct CombinationSolution {
  int q = 0;
  std::vector<CombinationMember> members;

  std::size_t n_steps() const;
  long total_points() const;
};

CombinationSolution solve_combination(int q,
                                      const std::vector<AxisFamily>& families,
                                      const ProblemFactory& factory,
                                      const ExpRKTableau& tab, int n_steps,
                                      int krylov_m = 100, int threads = 1);

double evaluate_combined(const CombinationSolution& sol, std::size_t t_index,
                         const std::vector<double>& point);

// level tuple, coefficient, per-axis sizes, total size.
void write_member_csv(std::ostream& os, const CombinationSolution& sol);

}  // namespace mbsde

#endif  // MARKOVBSDE_SPARSEGRID_HPP_
