// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/integrators.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace mbsde {
namespace {

PhiCombination combo(std::initializer_list<PhiTerm> terms) {
  return PhiCombination{std::vector<PhiTerm>(terms)};
}

ExpRKTableau blank(const std::string& name, std::vector<double> c) {
  ExpRKTableau t;
  t.name = name;
  t.stages = static_cast<int>(c.size());
  t.c = std::move(c);
  t.chi.push_back(combo({{1.0, 0, 1.0}}));
  for (double ci : t.c) t.chi.push_back(combo({{1.0, 0, ci}}));
  t.a.assign(t.stages, std::vector<PhiCombination>(t.stages));
  t.b.assign(t.stages, PhiCombination{});
  return t;
}

// phi_1 - 3 phi_2 + 4 phi_3, the first weight shared by the 3rd/4th order
// schemes.
PhiCombination b_first() {
  return combo({{1.0, 1, 1.0}, {-3.0, 2, 1.0}, {4.0, 3, 1.0}});
}

std::string describe_stage(int stage, double t) {
  std::ostringstream msg;
  msg << "stage " << stage << " at t=" << std::setprecision(17) << t;
  return msg.str();
}

}  // namespace

std::vector<std::string> scheme_names() {
  return {"lawson_euler", "norsett_euler", "etd2rk",
          "etdrk3",       "etdrk4",        "hochost4"};
}

ExpRKTableau tableau(const std::string& name) {
  if (name == "lawson_euler") {
    ExpRKTableau t = blank(name, {0.0});
    t.b[0] = combo({{1.0, 0, 1.0}});
    return t;
  }
  if (name == "norsett_euler") {
    ExpRKTableau t = blank(name, {0.0});
    t.b[0] = combo({{1.0, 1, 1.0}});
    return t;
  }
  if (name == "etd2rk") {
    ExpRKTableau t = blank(name, {0.0, 1.0});
    t.a[1][0] = combo({{1.0, 1, 1.0}});
    t.b[0] = combo({{1.0, 1, 1.0}, {-1.0, 2, 1.0}});
    t.b[1] = combo({{1.0, 2, 1.0}});
    return t;
  }
  if (name == "etdrk3") {
    ExpRKTableau t = blank(name, {0.0, 0.5, 1.0});
    t.a[1][0] = combo({{0.5, 1, 0.5}});
    t.a[2][0] = combo({{-1.0, 1, 1.0}});
    t.a[2][1] = combo({{2.0, 1, 1.0}});
    t.b[0] = b_first();
    t.b[1] = combo({{4.0, 2, 1.0}, {-8.0, 3, 1.0}});
    t.b[2] = combo({{-1.0, 2, 1.0}, {4.0, 3, 1.0}});
    return t;
  }
  if (name == "etdrk4") {
    ExpRKTableau t = blank(name, {0.0, 0.5, 0.5, 1.0});
    t.a[1][0] = combo({{0.5, 1, 0.5}});
    t.a[2][1] = combo({{0.5, 1, 0.5}});
    // 1/2 phi_1(z/2) (e^{z/2} - 1) written as phi_1(z) - phi_1(z/2).
    t.a[3][0] = combo({{1.0, 1, 1.0}, {-1.0, 1, 0.5}});
    t.a[3][2] = combo({{1.0, 1, 0.5}});
    t.b[0] = b_first();
    t.b[1] = combo({{2.0, 2, 1.0}, {-4.0, 3, 1.0}});
    t.b[2] = t.b[1];
    t.b[3] = combo({{-1.0, 2, 1.0}, {4.0, 3, 1.0}});
    return t;
  }
  if (name == "hochost4") {
    ExpRKTableau t = blank(name, {0.0, 0.5, 0.5, 1.0, 0.5});
    t.a[1][0] = combo({{0.5, 1, 0.5}});
    t.a[2][0] = combo({{0.5, 1, 0.5}, {-1.0, 2, 0.5}});
    t.a[2][1] = combo({{1.0, 2, 0.5}});
    t.a[3][0] = combo({{1.0, 1, 1.0}, {-2.0, 2, 1.0}});
    t.a[3][1] = combo({{1.0, 2, 1.0}});
    t.a[3][2] = t.a[3][1];
    // a52 = a53 = 1/2 phi_2(z/2) - phi_3(z) + 1/4 phi_2(z) - 1/2 phi_3(z/2)
    // a54 = 1/4 phi_2(z/2) - a52
    // a51 = 1/2 phi_1(z/2) - 2 a52 - a54
    t.a[4][1] = combo({{0.5, 2, 0.5}, {-1.0, 3, 1.0}, {0.25, 2, 1.0},
                       {-0.5, 3, 0.5}});
    t.a[4][2] = t.a[4][1];
    t.a[4][3] = combo({{-0.25, 2, 0.5}, {1.0, 3, 1.0}, {-0.25, 2, 1.0},
                       {0.5, 3, 0.5}});
    t.a[4][0] = combo({{0.5, 1, 0.5}, {-0.75, 2, 0.5}, {1.0, 3, 1.0},
                       {-0.25, 2, 1.0}, {0.5, 3, 0.5}});
    t.b[0] = b_first();
    t.b[3] = combo({{-1.0, 2, 1.0}, {4.0, 3, 1.0}});
    t.b[4] = combo({{4.0, 2, 1.0}, {-8.0, 3, 1.0}});
    return t;
  }
  throw ArgumentError("unknown scheme '" + name + "'");
}

Vector step(const ExpRKTableau& tab, const BackwardProblem& problem,
            double t_next, const Vector& z_next, double dt,
            PhiEvaluator& phi) {
  const int s = tab.stages;
  const Eigen::Index n = z_next.size();

  std::vector<const PhiCombination*> chis;
  for (const PhiCombination& c : tab.chi) chis.push_back(&c);
  std::vector<Vector> acc = phi.apply(z_next, chis);
  Vector result = std::move(acc[0]);

  for (int i = 0; i < s; ++i) {
    const double t_stage = t_next - tab.c[i] * dt;
    const Vector& zeta = acc[i + 1];
    if (!zeta.allFinite()) {
      throw NumericError("non-finite stage vector, " +
                         describe_stage(i + 1, t_stage));
    }
    if (!problem.nonlinearity) continue;
    const Vector g = problem.nonlinearity(t_stage, zeta);
    if (g.size() != n) {
      throw NumericError("nonlinearity returned wrong dimension, " +
                         describe_stage(i + 1, t_stage));
    }
    if (!g.allFinite()) {
      throw NumericError("nonlinearity returned non-finite values, " +
                         describe_stage(i + 1, t_stage));
    }
    std::vector<const PhiCombination*> combos;
    std::vector<int> targets;  // stage index receiving the term, -1 = result
    for (int k = i + 1; k < s; ++k) {
      if (!tab.a[k][i].empty()) {
        combos.push_back(&tab.a[k][i]);
        targets.push_back(k);
      }
    }
    if (!tab.b[i].empty()) {
      combos.push_back(&tab.b[i]);
      targets.push_back(-1);
    }
    if (combos.empty()) continue;
    std::vector<Vector> r = phi.apply(g, combos);
    for (std::size_t k = 0; k < combos.size(); ++k) {
      Vector& dst = targets[k] < 0 ? result : acc[targets[k] + 1];
      dst.noalias() += dt * r[k];
    }
  }
  if (!result.allFinite()) {
    throw NumericError("non-finite step result, " + describe_stage(s, t_next - dt));
  }
  return result;
}

Vector step(const ExpRKTableau& tab, const BackwardProblem& problem,
            double t_next, const Vector& z_next, double dt, int krylov_m) {
  if (!problem.q) throw ArgumentError("backward problem has no generator");
  PhiEvaluator phi(*problem.q, dt, krylov_m);
  return step(tab, problem, t_next, z_next, dt, phi);
}

Trajectory solve_backward(const ExpRKTableau& tab,
                          const BackwardProblem& problem, int n_steps,
                          int krylov_m) {
  if (n_steps < 1) throw ArgumentError("n_steps must be >= 1");
  if (!problem.q) throw ArgumentError("backward problem has no generator");
  if (problem.terminal.size() != problem.q->rows()) {
    throw ArgumentError("terminal vector does not match generator dimension");
  }
  if (!(problem.horizon > 0.0)) throw ArgumentError("horizon must be positive");
  const double dt = problem.horizon / n_steps;
  Trajectory traj;
  traj.times.resize(n_steps + 1);
  traj.values.resize(n_steps + 1);
  for (int m = 0; m <= n_steps; ++m) traj.times[m] = m * dt;
  traj.times[n_steps] = problem.horizon;
  traj.values[n_steps] = problem.terminal;
  PhiEvaluator phi(*problem.q, dt, krylov_m);
  for (int m = n_steps - 1; m >= 0; --m) {
    traj.values[m] = step(tab, problem, traj.times[m + 1], traj.values[m + 1],
                          dt, phi);
  }
  return traj;
}

double evaluate(const Trajectory& traj, const TensorGrid& grid,
                std::size_t t_index, std::size_t state_index) {
  if (t_index >= traj.values.size()) throw ArgumentError("time index out of range");
  if (state_index >= grid.total_size() ||
      static_cast<Eigen::Index>(state_index) >= traj.values[t_index].size()) {
    throw ArgumentError("state index out of range");
  }
  return traj.values[t_index][state_index];
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::size_t stride) {
  if (stride == 0) throw ArgumentError("stride must be >= 1");
  if (traj.values.empty()) return;
  const Eigen::Index n = traj.values.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; i += stride) os << ",node_" << i;
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t m = 0; m < traj.values.size(); ++m) {
    os << traj.times[m];
    for (Eigen::Index i = 0; i < n; i += stride) os << ',' << traj.values[m][i];
    os << '\n';
  }
}

}  // namespace mbsde
