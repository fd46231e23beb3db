// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <doctest.h>

#include "markovbsde/expmv.hpp"
#include "markovbsde/generator.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/integrators.hpp"

using namespace mbsde;

namespace {

const char* const kSchemes[] = {"lawson_euler", "norsett_euler", "etd2rk",
                                "etdrk3",       "etdrk4",        "hochost4"};

Generator bs_generator(int half_count) {
  return build_generator_1d(tavella_randall_grid(0, 100, 200, half_count, 50, 50),
                            [](double x) { return 0.03 * x; },
                            [](double x) { return 0.2 * x; });
}

Vector call_terminal(const Generator& gen) {
  const Grid1D& g = gen.grid().axis(0);
  Vector v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) v[static_cast<Eigen::Index>(i)] = std::max(g[i] - 100.0, 0.0);
  return v;
}

// Simpson rule for int_0^1 f(theta) d theta.
template <typename F>
double simpson(F f, int n = 2000) {
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("tableau shapes") {
  const ExpRKTableau le = tableau("lawson_euler");
  CHECK(le.stages == 1);
  REQUIRE(le.b[0].terms.size() == 1);
  CHECK(le.b[0].terms[0].l == 0);
  CHECK(le.b[0].terms[0].weight == 1.0);
  CHECK(tableau("norsett_euler").b[0].terms[0].l == 1);
  const ExpRKTableau e2 = tableau("etd2rk");
  CHECK(e2.stages == 2);
  CHECK(e2.c == std::vector<double>{0.0, 1.0});
  CHECK(e2.b[1].terms.size() == 1);
  CHECK(e2.b[1].terms[0].l == 2);
  for (const char* name : kSchemes) {
    const ExpRKTableau t = tableau(name);
    REQUIRE(t.chi.size() == static_cast<std::size_t>(t.stages) + 1);
    CHECK(t.chi[0].terms.size() == 1);
    CHECK(t.chi[0].terms[0].l == 0);
    CHECK(t.chi[0].terms[0].gamma == 1.0);
    for (int i = 0; i < t.stages; ++i) {
      for (int j = i; j < t.stages; ++j) CHECK(t.a[i][j].empty());
    }
  }
  CHECK_THROWS_AS(tableau("rk4"), ArgumentError);
}

TEST_CASE("without a nonlinearity every scheme is the exponential") {
  const Generator gen = bs_generator(50);
  const Vector g = call_terminal(gen);
  BackwardProblem p{&gen.q, {}, g, 1.0};
  const Vector ref = phi_combination_action(PhiCombination{{{1.0, 0, 1.0}}}, gen.q, 0.1, g, 100);
  for (const char* name : kSchemes) {
    CHECK((step(tableau(name), p, 1.0, g, 0.1, 100) - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
  const Vector exact = expm(Matrix(gen.q)) * g;
  const Trajectory one = solve_backward(tableau("hochost4"), p, 1, 200);
  CHECK((one.values[0] - exact).cwiseAbs().maxCoeff() < 1e-10 * exact.cwiseAbs().maxCoeff());
}

TEST_CASE("Norsett-Euler is exact for a constant forcing") {
  const double q = -2.5, h = 0.7, z = 1.3, dt = 0.2;
  SparseMatrix qm(1, 1);
  qm.insert(0, 0) = q;
  BackwardProblem p{&qm, [h](double, const Vector& v) { return Vector::Constant(v.size(), h); },
                    Vector::Constant(1, z), 1.0};
  const double expect = std::exp(dt * q) * z + dt * (std::exp(dt * q) - 1.0) / (dt * q) * h;
  CHECK(step(tableau("norsett_euler"), p, 1.0, p.terminal, dt, 1)[0] ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("ETD2RK step matches quadrature of its integrals") {
  const double dt = 0.3;
  Vector d(2), z(2);
  d << -4.0, 1.5;
  z << 0.8, -1.1;
  SparseMatrix qm = Matrix(d.asDiagonal()).sparseView();
  BackwardProblem p{&qm, [](double, const Vector& v) { return v; }, z, 1.0};
  const Vector got = step(tableau("etd2rk"), p, 1.0, z, dt, 2);
  for (int i = 0; i < 2; ++i) {
    const double a = dt * d[i];
    const double i0 = simpson([a](double th) { return std::exp((1 - th) * a); });
    const double i1 = simpson([a](double th) { return std::exp((1 - th) * a) * th; });
    const double zeta = std::exp(a) * z[i] + dt * i0 * z[i];
    const double expect = std::exp(a) * z[i] + dt * (i0 - i1) * z[i] + dt * i1 * zeta;
    CHECK(got[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("empirical convergence orders") {
  // Stiff linear test: U' + (Q - diag(r)) U = 0 with the rate handled
  // explicitly. Dense phi evaluation keeps the spatial part exact. Boundary
  // rows of Q vanish, so errors are taken over interior nodes.
  const Generator gen = bs_generator(100);
  const Grid1D& g = gen.grid().axis(0);
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  Vector rate(n);
  for (Eigen::Index i = 0; i < n; ++i) rate[i] = 0.5 + 1.0 * g[static_cast<std::size_t>(i)] / 200.0;
  const Vector terminal = call_terminal(gen);
  BackwardProblem p{&gen.q, [&rate](double, const Vector& v) { return Vector(-rate.cwiseProduct(v)); },
                    terminal, 1.0};
  const Matrix a = Matrix(gen.q) - Matrix(rate.asDiagonal());
  const Vector exact = expm(a) * terminal;

  const std::map<std::string, double> min_order = {
      {"lawson_euler", 0.9}, {"norsett_euler", 0.9}, {"etd2rk", 1.8},
      {"etdrk3", 2.6},       {"etdrk4", 3.3},        {"hochost4", 3.3}};
  for (const auto& [name, bound] : min_order) {
    std::vector<double> err;
    for (int nt : {10, 20, 40, 80, 160}) {
      const Trajectory tr = solve_backward(tableau(name), p, nt, static_cast<int>(n));
      err.push_back((tr.values[0] - exact).segment(1, n - 2).cwiseAbs().maxCoeff());
    }
    // Least-squares slope of log2(err) against log2(N_t).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < err.size(); ++k) {
      const double x = static_cast<double>(k), y = std::log2(err[k]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = static_cast<double>(err.size());
    const double order = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    INFO(name << " observed order " << order << " errors " << err[0] << " " << err[4]);
    CHECK(order >= bound);
  }
}

TEST_CASE("terminal anchoring and evaluation") {
  const Generator gen = bs_generator(20);
  const Vector g = call_terminal(gen);
  BackwardProblem p{&gen.q, [](double, const Vector& v) { return Vector(-0.03 * v); }, g, 1.0};
  const Trajectory tr = solve_backward(tableau("etdrk3"), p, 7);
  REQUIRE(tr.n_steps() == 7);
  CHECK(tr.values[7] == g);
  CHECK(tr.times[7] == 1.0);
  CHECK(tr.times[3] == doctest::Approx(3.0 / 7.0));
  CHECK(evaluate(tr, gen.grid(), 7, 30) == g[30]);
  CHECK_THROWS_AS(evaluate(tr, gen.grid(), 8, 0), ArgumentError);
  CHECK_THROWS_AS(evaluate(tr, gen.grid(), 0, 41), ArgumentError);
  CHECK_THROWS_AS(solve_backward(tableau("etdrk3"), p, 0), ArgumentError);
}

TEST_CASE("affine nonlinearity gives an affine solution map") {
  const Generator gen = bs_generator(25);
  const Eigen::Index n = static_cast<Eigen::Index>(gen.dimension());
  const Vector c = Vector::LinSpaced(n, -1.0, 2.0);
  auto solve = [&](const Vector& g) {
    BackwardProblem p{&gen.q, [&c](double t, const Vector& v) { return Vector(-0.4 * v + t * c); }, g, 1.0};
    return solve_backward(tableau("hochost4"), p, 6).values[0];
  };
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Vector u(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = nd(rng);
    w[i] = nd(rng);
  }
  const double a = 0.3;
  const Vector lhs = solve(a * u + (1 - a) * w);
  const Vector rhs = a * solve(u) + (1 - a) * solve(w);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("symmetric problem stays symmetric") {
  const Generator gen = build_generator_1d(uniform_grid(-2, 0, 2, 20), [](double) { return 0.0; },
                                           [](double) { return 0.8; });
  const Grid1D& g = gen.grid().axis(0);
  Vector term(41);
  for (int i = 0; i < 41; ++i) term[i] = std::cos(g[i]) + g[i] * g[i];
  BackwardProblem p{&gen.q, [](double, const Vector& v) { return Vector(-0.1 * v.array().sin().matrix()); },
                    term, 1.0};
  const Vector v0 = solve_backward(tableau("etdrk4"), p, 10, 41).values[0];
  for (int i = 0; i < 41; ++i) CHECK(std::abs(v0[i] - v0[40 - i]) < 1e-10);
}

TEST_CASE("bad nonlinearity output is reported with the stage") {
  const Generator gen = bs_generator(10);
  const Vector g = call_terminal(gen);
  BackwardProblem wrong{&gen.q, [](double, const Vector&) { return Vector::Zero(3); }, g, 1.0};
  CHECK_THROWS_AS(solve_backward(tableau("etd2rk"), wrong, 2), NumericError);
  BackwardProblem nan{&gen.q, [](double, const Vector& v) { return Vector::Constant(v.size(), std::nan("")); }, g, 1.0};
  try {
    solve_backward(tableau("hochost4"), nan, 2);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("stage") != std::string::npos);
  }
}

TEST_CASE("trajectory CSV") {
  Trajectory tr;
  tr.times = {0.0, 1.0};
  tr.values = {Vector::Constant(3, 1.5), Vector::Constant(3, 2.0)};
  std::ostringstream os;
  write_trajectory_csv(os, tr, 2);
  const std::string s = os.str();
  CHECK(s.substr(0, s.find('\n')) == "t,node_0,node_2");
}
