// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "markovbsde/generator.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/models.hpp"
#include "markovbsde/sparsegrid.hpp"

using namespace mbsde;

namespace {

struct SabrMember {
  Generator gen;
};

ProblemFactory sabr_factory() {
  return [](const TensorGrid& grid) {
    const auto [drift, diff] = slv_assemble(sabr(0.4, 0.9, 0.3));
    auto storage = std::make_shared<SabrMember>(SabrMember{build_generator_nd(grid, drift, diff)});
    Vector g(static_cast<Eigen::Index>(grid.total_size()));
    for (std::size_t i = 0; i < grid.total_size(); ++i) g[i] = std::max(grid.point(i)[0] - 100.0, 0.0);
    MemberProblem mp;
    mp.problem = BackwardProblem{&storage->gen.q, assemble_F(grid, storage->gen.differences, diff, linear_driver(0.05, 2)),
                                 g, 1.0};
    mp.storage = storage;
    return mp;
  };
}

std::vector<AxisFamily> sabr_families() {
  return {[](int l) { return tavella_randall_grid(0, 100, 200, 1 << (l - 1), 5, 5); },
          [](int l) { return uniform_grid(0, 0.4, 0.8, 1 << (l - 1)); }};
}

}  // namespace

TEST_CASE("level enumeration") {
  const auto levels = enumerate_levels(4, 2);
  REQUIRE(levels.size() == 5);
  CHECK(levels[0] == LevelIndex{1, 3});
  CHECK(levels[2] == LevelIndex{3, 1});
  CHECK(levels[3] == LevelIndex{1, 2});
  std::set<LevelIndex> unique(levels.begin(), levels.end());
  CHECK(unique.size() == levels.size());
  for (int d = 1; d <= 4; ++d) {
    for (int q = d; q <= d + 5; ++q) {
      long sum = 0;
      for (const LevelIndex& l : enumerate_levels(q, d)) {
        for (int v : l) CHECK(v >= 1);
        sum += combination_coefficient(q, d, l);
      }
      CHECK(sum == 1);
    }
  }
  CHECK(combination_coefficient(4, 2, {1, 2}) == -1);
  CHECK(combination_coefficient(8, 4, {2, 2, 1, 1}) == 3);
  CHECK(combination_coefficient(8, 4, {2, 2, 2, 1}) == -3);
}

TEST_CASE("point counts") {
  CHECK(count_points(7, 2) == 1475);
  CHECK(count_points(8, 2) == 3333);
  CHECK(count_points(9, 2) == 7431);
  CHECK(count_points(10, 2) == 16393);
  CHECK(count_points(8, 4) == 36901);
}

TEST_CASE("multilinear interpolation") {
  const TensorGrid grid({tavella_randall_grid(0, 1, 3, 4, 1, 1), uniform_grid(-1, 0, 1, 3)});
  Vector v(static_cast<Eigen::Index>(grid.total_size()));
  auto f = [](double x, double y) { return 1.0 + 2 * x - y + 0.5 * x * y; };
  for (std::size_t i = 0; i < grid.total_size(); ++i) {
    const auto p = grid.point(i);
    v[i] = f(p[0], p[1]);
  }
  for (auto [x, y] : {std::pair{0.0, -1.0}, {1.7, 0.3}, {3.0, 1.0}, {0.4, -0.55}}) {
    CHECK(interpolate(grid, v, {x, y}) == doctest::Approx(f(x, y)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(interpolate(grid, v, {3.5, 0.0}), ArgumentError);
  CHECK_THROWS_AS(interpolate(grid, v, {1.0}), ArgumentError);
}

TEST_CASE("pointwise problem combines to the single-grid value") {
  // Q = 0 and a bilinear terminal: each member carries the same node values
  // and interpolates them exactly, so the coefficients must sum to one.
  auto g = [](const std::vector<double>& p) { return 1.0 + p[0] + 2 * p[1] + 3 * p[0] * p[1]; };
  ProblemFactory factory = [&g](const TensorGrid& grid) {
    auto gen = std::make_shared<Generator>(build_generator_nd(
        grid, [](const Vector&) { return Vector::Zero(2); }, [](const Vector&) { return Matrix::Zero(2, 2); }));
    Vector term(static_cast<Eigen::Index>(grid.total_size()));
    for (std::size_t i = 0; i < grid.total_size(); ++i) term[i] = g(grid.point(i));
    return MemberProblem{gen, BackwardProblem{&gen->q, [](double, const Vector& u) { return Vector(-0.1 * u); },
                                              term, 1.0}};
  };
  const std::vector<AxisFamily> fam = {[](int l) { return uniform_grid(0, 1, 2, 1 << (l - 1)); },
                                       [](int l) { return uniform_grid(0, 1, 2, 1 << (l - 1)); }};
  const CombinationSolution sol = solve_combination(5, fam, factory, tableau("etd2rk"), 4);
  CHECK(sol.total_points() == count_points(5, 2));
  const double x = 0.37, y = 1.61;
  const double single = sol.members[0].trajectory.values[0][0] / g({0, 0});
  CHECK(evaluate_combined(sol, 0, {x, y}) == doctest::Approx(single * g({x, y})).epsilon(1e-12));
  CHECK(evaluate_combined(sol, 4, {x, y}) == doctest::Approx(g({x, y})).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate_combined(sol, 5, {x, y}), ArgumentError);
}

TEST_CASE("one-dimensional combination is the full grid") {
  const CombinationSolution sol = solve_combination(
      6, {[](int l) { return uniform_grid(0, 1, 2, 1 << (l - 1)); }},
      [](const TensorGrid& grid) {
        auto gen = std::make_shared<Generator>(build_generator_1d(grid.axis(0), [](double) { return 0.1; },
                                                                  [](double) { return 0.3; }));
        Vector term(static_cast<Eigen::Index>(grid.total_size()));
        for (std::size_t i = 0; i < grid.total_size(); ++i) term[i] = std::sin(grid.point(i)[0]);
        return MemberProblem{gen, BackwardProblem{&gen->q, {}, term, 1.0}};
      },
      tableau("lawson_euler"), 3);
  REQUIRE(sol.members.size() == 1);
  CHECK(sol.members[0].coefficient == 1);
  CHECK(sol.members[0].grid.total_size() == 65);
}

TEST_CASE("threaded and serial combinations agree bitwise") {
  const CombinationSolution a = solve_combination(5, sabr_families(), sabr_factory(), tableau("etdrk3"), 5, 100, 1);
  const CombinationSolution b = solve_combination(5, sabr_families(), sabr_factory(), tableau("etdrk3"), 5, 100, 3);
  REQUIRE(a.members.size() == b.members.size());
  for (std::size_t k = 0; k < a.members.size(); ++k) {
    CHECK(a.members[k].level == b.members[k].level);
    CHECK(a.members[k].trajectory.values[0] == b.members[k].trajectory.values[0]);
  }
  const double va = evaluate_combined(a, 0, {100, 0.4});
  CHECK(va == evaluate_combined(b, 0, {100, 0.4}));
  CHECK(va > 8.0);
  CHECK(va < 11.0);
  std::ostringstream os;
  write_member_csv(os, a);
  CHECK(os.str().rfind("level,coefficient,axis_sizes,total_size\n1-4,1,3x17,51\n", 0) == 0);
}
