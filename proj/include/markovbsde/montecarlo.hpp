// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_MONTECARLO_HPP_
#define MARKOVBSDE_MONTECARLO_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/integrators.hpp"
#include "markovbsde/models.hpp"

namespace mbsde {

struct ChainPath {
  std::vector<double> jump_times;     // time of entering states[k], k >= 1
  std::vector<std::size_t> states;    // states[0] is the start state
};

// Exact event-driven simulation on [0, T]. Refuses when T * max rate > 1e7.
ChainPath gillespie_simulate(const SparseMatrix& q, std::size_t start,
                             double T, std::uint64_t seed,
                             std::uint64_t stream = 0);

struct MCEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Average of G(X_T) + int_0^T H(s, U_s)(X_s) ds with U piecewise linear in
// time between trajectory nodes.
MCEstimate feynman_kac_check(const SparseMatrix& q,
                             const BackwardProblem& problem,
                             const Trajectory& traj, std::size_t start,
                             long n_paths, std::uint64_t seed);

// poly_k(x) = sum_j (-1)^j / j! binom(k, j) x^j, k = 0..p.
std::vector<std::function<double(double)>> laguerre_basis(int p);
void laguerre_values(int p, double x, double* out);

struct LSMCConfig {
  long n_paths = 0;
  int n_steps = 0;
  int basis_degree = 0;
  std::uint64_t seed = 0;
};

struct LSMCProblem {
  int dim = 1;
  std::function<void(const double* x, double* out)> drift;      // d
  std::function<void(const double* x, double* out)> diffusion;  // d x d, row-major
  DriverSpec driver;
  std::function<double(const double* x)> payoff;
  std::vector<double> x0;
  double horizon = 1.0;
};

struct LSMCResult {
  double y0 = 0.0;
  double max_condition = 0.0;  // largest regression condition estimate
  int min_rank = 0;            // smallest numerical rank of the design
};

LSMCResult lsmc_solve(const LSMCProblem& problem, const LSMCConfig& cfg);

struct RunStatistics {
  double mean = 0.0;
  double std = 0.0;
};

RunStatistics run_statistics(const std::vector<double>& runs);

// run,estimate,seed rows followed by mean and std summary rows.
void write_runs_csv(std::ostream& os, const std::vector<double>& runs,
                    const std::vector<std::uint64_t>& seeds);

}  // namespace mbsde

#endif  // MARKOVBSDE_MONTECARLO_HPP_
