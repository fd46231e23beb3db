// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/montecarlo.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "markovbsde/generator.hpp"
#include "markovbsde/random.hpp"

namespace mbsde {
namespace {

constexpr double kMaxExpectedJumps = 1e7;

void check_rates(const SparseMatrix& q, double T) {
  double max_rate = 0.0;
  for (Eigen::Index r = 0; r < q.outerSize(); ++r) {
    max_rate = std::max(max_rate, -q.coeff(r, r));
  }
  if (max_rate * T > kMaxExpectedJumps) {
    throw ArgumentError("chain jumps too fast for exact simulation: expected " +
                        std::to_string(max_rate * T) + " jumps");
  }
}

// Simulation without the validity and rate checks.
template <typename OnHold>
std::size_t simulate(const SparseMatrix& q, std::size_t start, double T,
                     PhiloxStream& rng, OnHold on_hold) {
  double t = 0.0;
  std::size_t state = start;
  for (;;) {
    const double rate = -q.coeff(state, state);
    if (!(rate > 0.0)) {
      on_hold(state, t, T);
      return state;
    }
    const double tau = -std::log(rng.uniform()) / rate;
    if (t + tau >= T) {
      on_hold(state, t, T);
      return state;
    }
    on_hold(state, t, t + tau);
    t += tau;
    double target = rng.uniform() * rate;
    std::size_t next = state;
    for (SparseMatrix::InnerIterator it(q, state); it; ++it) {
      if (static_cast<std::size_t>(it.col()) == state || it.value() <= 0.0) continue;
      next = it.col();
      target -= it.value();
      if (target < 0.0) break;
    }
    state = next;
  }
}

}  // namespace

ChainPath gillespie_simulate(const SparseMatrix& q, std::size_t start,
                             double T, std::uint64_t seed,
                             std::uint64_t stream) {
  if (start >= static_cast<std::size_t>(q.rows())) {
    throw ArgumentError("start state out of range");
  }
  if (!check_validity(q).valid) throw ArgumentError("matrix is not a valid Q-matrix");
  check_rates(q, T);
  PhiloxStream rng(seed, stream);
  ChainPath path;
  simulate(q, start, T, rng, [&path](std::size_t s, double a, double) {
    if (path.states.empty() || path.states.back() != s) {
      if (!path.states.empty()) path.jump_times.push_back(a);
      path.states.push_back(s);
    }
  });
  return path;
}

MCEstimate feynman_kac_check(const SparseMatrix& q,
                             const BackwardProblem& problem,
                             const Trajectory& traj, std::size_t start,
                             long n_paths, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(q.rows());
  if (start >= n) throw ArgumentError("start state out of range");
  if (n_paths < 2) throw ArgumentError("need at least two paths");
  if (!check_validity(q).valid) throw ArgumentError("matrix is not a valid Q-matrix");
  const double T = problem.horizon;
  check_rates(q, T);
  const std::size_t steps = traj.n_steps();
  if (steps < 1 || traj.values.back().size() != static_cast<Eigen::Index>(n)) {
    throw ArgumentError("trajectory does not match the chain");
  }
  const double dt = T / static_cast<double>(steps);

  // H at the time nodes and its running integral (piecewise linear in time).
  Matrix h(steps + 1, n);
  for (std::size_t m = 0; m <= steps; ++m) {
    if (problem.nonlinearity) {
      h.row(m) = problem.nonlinearity(traj.times[m], traj.values[m]).transpose();
    } else {
      h.row(m).setZero();
    }
  }
  Matrix cum = Matrix::Zero(steps + 1, n);
  for (std::size_t m = 0; m < steps; ++m) {
    cum.row(m + 1) = cum.row(m) + 0.5 * dt * (h.row(m) + h.row(m + 1));
  }
  auto integral_to = [&](std::size_t s, double t) {
    if (t >= T) return cum(steps, s);
    const std::size_t m = std::min(static_cast<std::size_t>(t / dt), steps - 1);
    const double u = t - m * dt;
    return cum(m, s) + u * h(m, s) + 0.5 * u * u * (h(m + 1, s) - h(m, s)) / dt;
  };

  double sum = 0.0;
  double sum_sq = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    PhiloxStream rng(seed, static_cast<std::uint64_t>(p));
    double acc = 0.0;
    const std::size_t end = simulate(q, start, T, rng,
                                     [&](std::size_t s, double a, double b) {
                                       acc += integral_to(s, b) - integral_to(s, a);
                                     });
    acc += problem.terminal[end];
    sum += acc;
    sum_sq += acc * acc;
  }
  const double np = static_cast<double>(n_paths);
  const double mean = sum / np;
  const double var = std::max(0.0, (sum_sq - np * mean * mean) / (np - 1.0));
  return {mean, std::sqrt(var / np)};
}

void laguerre_values(int p, double x, double* out) {
  for (int k = 0; k <= p; ++k) {
    // Horner on c_j = (-1)^j / j! * binom(k, j).
    double acc = 0.0;
    for (int j = k; j >= 0; --j) {
      double binom = 1.0;
      for (int i = 1; i <= j; ++i) binom = binom * (k - j + i) / i;
      const double c = ((j % 2) ? -1.0 : 1.0) * binom / factorial(j);
      acc = acc * x + c;
    }
    out[k] = acc;
  }
}

std::vector<std::function<double(double)>> laguerre_basis(int p) {
  if (p < 0) throw ArgumentError("basis degree must be >= 0");
  std::vector<std::function<double(double)>> basis;
  for (int k = 0; k <= p; ++k) {
    basis.emplace_back([k](double x) {
      std::vector<double> v(k + 1);
      laguerre_values(k, x, v.data());
      return v[k];
    });
  }
  return basis;
}

LSMCResult lsmc_solve(const LSMCProblem& problem, const LSMCConfig& cfg) {
  const int d = problem.dim;
  if (cfg.n_paths < 2 || cfg.n_steps < 1 || cfg.basis_degree < 0) {
    throw ArgumentError("invalid LSMC configuration");
  }
  if (static_cast<int>(problem.x0.size()) != d || problem.driver.dim != d) {
    throw ArgumentError("LSMC problem dimensions are inconsistent");
  }
  const long m = cfg.n_paths;
  const int steps = cfg.n_steps;
  const double dt = problem.horizon / steps;
  const double sdt = std::sqrt(dt);

  // Paths: x[n] is m x d, dw[n] is m x d.
  std::vector<Matrix> x(steps + 1, Matrix(m, d));
  std::vector<Matrix> dw(steps, Matrix(m, d));
  std::vector<double> mu(d), sig(d * d);
  for (long i = 0; i < m; ++i) {
    PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(i));
    for (int p = 0; p < d; ++p) x[0](i, p) = problem.x0[p];
    std::vector<double> cur(problem.x0);
    for (int n = 0; n < steps; ++n) {
      problem.drift(cur.data(), mu.data());
      problem.diffusion(cur.data(), sig.data());
      for (int p = 0; p < d; ++p) dw[n](i, p) = sdt * rng.normal();
      for (int p = 0; p < d; ++p) {
        double inc = mu[p] * dt;
        for (int q = 0; q < d; ++q) inc += sig[p * d + q] * dw[n](i, q);
        cur[p] += inc;
        x[n + 1](i, p) = cur[p];
      }
    }
  }

  const int per_axis = cfg.basis_degree + 1;
  int k_basis = 1;
  for (int p = 0; p < d; ++p) k_basis *= per_axis;

  Vector y(m);
  for (long i = 0; i < m; ++i) {
    std::vector<double> xi(d);
    for (int p = 0; p < d; ++p) xi[p] = x[steps](i, p);
    y[i] = problem.payoff(xi.data());
  }

  LSMCResult res;
  res.min_rank = k_basis;
  Matrix design(m, k_basis);
  Matrix rhs(m, 1 + d);
  std::vector<double> lag(per_axis * d);
  std::vector<double> xi(d), zi(d);
  for (int n = steps - 1; n >= 0; --n) {
    const double t = n * dt;
    for (long i = 0; i < m; ++i) {
      rhs(i, 0) = y[i];
      for (int p = 0; p < d; ++p) rhs(i, 1 + p) = y[i] * dw[n](i, p) / dt;
    }
    Matrix fitted;
    if (n == 0) {
      fitted = rhs.colwise().mean().replicate(m, 1);
    } else {
      for (long i = 0; i < m; ++i) {
        for (int p = 0; p < d; ++p) {
          laguerre_values(cfg.basis_degree, x[n](i, p), lag.data() + p * per_axis);
        }
        for (int k = 0; k < k_basis; ++k) {
          int rem = k;
          double v = 1.0;
          for (int p = d - 1; p >= 0; --p) {
            v *= lag[p * per_axis + rem % per_axis];
            rem /= per_axis;
          }
          design(i, k) = v;
        }
      }
      Eigen::ColPivHouseholderQR<Matrix> qr(design);
      const int rank = static_cast<int>(qr.rank());
      res.min_rank = std::min(res.min_rank, rank);
      const auto rdiag = qr.matrixQR().diagonal().cwiseAbs();
      if (rank > 0) {
        res.max_condition = std::max(res.max_condition, rdiag(0) / rdiag(rank - 1));
      }
      fitted = design * qr.solve(rhs);
    }
    for (long i = 0; i < m; ++i) {
      for (int p = 0; p < d; ++p) {
        xi[p] = x[n](i, p);
        zi[p] = fitted(i, 1 + p);
      }
      const double c = fitted(i, 0);
      y[i] = c + dt * problem.driver.f(t, xi.data(), c, zi.data());
    }
  }
  res.y0 = y.mean();
  if (!std::isfinite(res.y0)) throw NumericError("LSMC produced a non-finite estimate");
  return res;
}

RunStatistics run_statistics(const std::vector<double>& runs) {
  if (runs.size() < 2) throw ArgumentError("need at least two runs for a standard deviation");
  const double n = static_cast<double>(runs.size());
  double mean = 0.0;
  for (double r : runs) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : runs) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

void write_runs_csv(std::ostream& os, const std::vector<double>& runs,
                    const std::vector<std::uint64_t>& seeds) {
  if (runs.size() != seeds.size()) throw ArgumentError("runs and seeds differ in length");
  os << "run,estimate,seed\n"
     << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    os << i << ',' << runs[i] << ',' << seeds[i] << '\n';
  }
  if (runs.size() >= 2) {
    const RunStatistics st = run_statistics(runs);
    os << "mean," << st.mean << ",\n";
    os << "std," << st.std << ",\n";
  }
}

}  // namespace mbsde
