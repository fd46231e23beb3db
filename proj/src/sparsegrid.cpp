// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/sparsegrid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace mbsde {
namespace {

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void levels_with_sum(int d, int sum, LevelIndex& prefix,
                     std::vector<LevelIndex>& out) {
  const int p = static_cast<int>(prefix.size());
  if (p == d - 1) {
    prefix.push_back(sum);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  // Remaining axes each need at least 1.
  for (int l = 1; l <= sum - (d - 1 - p); ++l) {
    prefix.push_back(l);
    levels_with_sum(d, sum - l, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<LevelIndex> enumerate_levels(int q, int d) {
  if (d < 1) throw ArgumentError("dimension must be >= 1");
  if (q < d) throw ArgumentError("level parameter q must be >= d");
  std::vector<LevelIndex> out;
  LevelIndex prefix;
  for (int sum = q; sum >= std::max(d, q - d + 1); --sum) {
    levels_with_sum(d, sum, prefix, out);
  }
  return out;
}

long combination_coefficient(int q, int d, const LevelIndex& level) {
  int sum = 0;
  for (int l : level) sum += l;
  const int k = q - sum;
  if (k < 0 || k > d - 1) return 0;
  const long c = binomial(d - 1, k);
  return (k % 2 == 0) ? c : -c;
}

long count_points(int q, int d, const std::function<long(int)>& axis_size) {
  long total = 0;
  for (const LevelIndex& level : enumerate_levels(q, d)) {
    long prod = 1;
    for (int l : level) prod *= axis_size ? axis_size(l) : (1L << l) + 1;
    total += prod;
  }
  return total;
}

double interpolate(const TensorGrid& grid, const Vector& values,
                   const std::vector<double>& point) {
  const std::size_t d = grid.dim();
  if (point.size() != d) throw ArgumentError("point has wrong dimension");
  if (static_cast<std::size_t>(values.size()) != grid.total_size()) {
    throw ArgumentError("value vector does not match grid");
  }
  std::vector<std::size_t> lo(d);
  std::vector<double> w(d);
  for (std::size_t p = 0; p < d; ++p) {
    const Grid1D& ax = grid.axis(p);
    const double x = point[p];
    if (!(x >= ax.front() && x <= ax.back())) {
      std::ostringstream msg;
      msg << "point coordinate " << x << " outside [" << ax.front() << ", "
          << ax.back() << "] on axis " << p;
      throw ArgumentError(msg.str());
    }
    const auto& nodes = ax.nodes();
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
    hi = std::clamp<std::size_t>(hi, 1, nodes.size() - 1);
    lo[p] = hi - 1;
    w[p] = (x - nodes[hi - 1]) / (nodes[hi] - nodes[hi - 1]);
  }
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << d;
  for (std::size_t c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t idx = 0;
    for (std::size_t p = 0; p < d; ++p) {
      const bool up = (c >> p) & 1U;
      const double wp = up ? w[p] : 1.0 - w[p];
      if (wp == 0.0) {
        weight = 0.0;
        break;
      }
      weight *= wp;
      idx += (lo[p] + (up ? 1 : 0)) * grid.stride(p);
    }
    if (weight != 0.0) acc += weight * values[idx];
  }
  return acc;
}

std::size_t CombinationSolution::n_steps() const {
  return members.empty() ? 0 : members.front().trajectory.n_steps();
}

long CombinationSolution::total_points() const {
  long total = 0;
  for (const auto& m : members) total += static_cast<long>(m.grid.total_size());
  return total;
}

CombinationSolution solve_combination(int q,
                                      const std::vector<AxisFamily>& families,
                                      const ProblemFactory& factory,
                                      const ExpRKTableau& tab, int n_steps,
                                      int krylov_m, int threads) {
  const int d = static_cast<int>(families.size());
  const std::vector<LevelIndex> levels = enumerate_levels(q, d);
  std::vector<std::unique_ptr<CombinationMember>> slots(levels.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= levels.size()) return;
      try {
        std::vector<Grid1D> axes;
        for (int p = 0; p < d; ++p) axes.push_back(families[p](levels[k][p]));
        TensorGrid grid(std::move(axes));
        MemberProblem mp = factory(grid);
        Trajectory traj = solve_backward(tab, mp.problem, n_steps, krylov_m);
        slots[k] = std::make_unique<CombinationMember>(CombinationMember{
            levels[k], combination_coefficient(q, d, levels[k]), std::move(grid),
            std::move(traj)});
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(levels.size());
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(threads, static_cast<int>(levels.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  CombinationSolution sol;
  sol.q = q;
  for (auto& s : slots) sol.members.push_back(std::move(*s));
  return sol;
}

double evaluate_combined(const CombinationSolution& sol, std::size_t t_index,
                         const std::vector<double>& point) {
  double acc = 0.0;
  for (const CombinationMember& m : sol.members) {
    if (t_index >= m.trajectory.values.size()) {
      throw ArgumentError("time index out of range");
    }
    acc += static_cast<double>(m.coefficient) *
           interpolate(m.grid, m.trajectory.values[t_index], point);
  }
  return acc;
}

void write_member_csv(std::ostream& os, const CombinationSolution& sol) {
  os << "level,coefficient,axis_sizes,total_size\n";
  for (const CombinationMember& m : sol.members) {
    for (std::size_t p = 0; p < m.level.size(); ++p) {
      os << (p ? "-" : "") << m.level[p];
    }
    os << ',' << m.coefficient << ',';
    for (std::size_t p = 0; p < m.grid.dim(); ++p) {
      os << (p ? "x" : "") << m.grid.axis(p).size();
    }
    os << ',' << m.grid.total_size() << '\n';
  }
}

}  // namespace mbsde
