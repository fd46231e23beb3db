// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_INTEGRATORS_HPP_
#define MARKOVBSDE_INTEGRATORS_HPP_

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/expmv.hpp"
#include "markovbsde/grid.hpp"

namespace mbsde {

// Explicit exponential Runge-Kutta scheme. chi[0] propagates the carried
// vector over a full step, chi[i] (1 <= i <= s) over c_i of it.
struct ExpRKTableau {
  std::string name;
  int stages = 0;
  std::vector<double> c;
  std::vector<PhiCombination> chi;            // s + 1 entries
  std::vector<std::vector<PhiCombination>> a;  // s x s, strictly lower
  std::vector<PhiCombination> b;               // s entries
};

ExpRKTableau tableau(const std::string& name);
std::vector<std::string> scheme_names();

using Nonlinearity = std::function<Vector(double t, const Vector& z)>;

// dU/dt + Q U + H(t, U) = 0 on [0, T], U_T = G.
struct BackwardProblem {
  const SparseMatrix* q = nullptr;
  Nonlinearity nonlinearity;  // empty means H == 0
  Vector terminal;
  double horizon = 1.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> values;

  std::size_t n_steps() const { return times.empty() ? 0 : times.size() - 1; }
};

// One backward step from t_next to t_next - dt.
Vector step(const ExpRKTableau& tab, const BackwardProblem& problem,
            double t_next, const Vector& z_next, double dt, int krylov_m);
Vector step(const ExpRKTableau& tab, const BackwardProblem& problem,
            double t_next, const Vector& z_next, double dt,
            PhiEvaluator& phi);

Trajectory solve_backward(const ExpRKTableau& tab,
                          const BackwardProblem& problem, int n_steps,
                          int krylov_m = 100);

double evaluate(const Trajectory& traj, const TensorGrid& grid,
                std::size_t t_index, std::size_t state_index);

// Header t,node_0,...; every `stride`-th node is written.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::size_t stride = 1);

}  // namespace mbsde

#endif  // MARKOVBSDE_INTEGRATORS_HPP_
