// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

// Exercises the shared library through its C interface only.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <doctest.h>

#include "markovbsde.h"

namespace {

double bs_mu(double x, void*) { return 0.03 * x; }
double bs_sigma(double x, void*) { return 0.2 * x; }
double rate_driver(double, const double*, double y, const double*, void* user) {
  return -*static_cast<double*>(user) * y;
}
double nan_driver(double, const double*, double, const double*, void*) { return std::nan(""); }

}  // namespace

TEST_CASE("C API grid and solve") {
  mbsde_grid* g = nullptr;
  REQUIRE(mbsde_grid_tavella_randall(0, 100, 200, 50, 50, 50, &g) == MBSDE_OK);
  REQUIRE(mbsde_grid_size(g) == 101);
  std::vector<double> nodes(101);
  CHECK(mbsde_grid_nodes(g, nodes.data(), nodes.size()) == MBSDE_OK);
  CHECK(nodes[50] == doctest::Approx(100.0));

  mbsde_grid* bad = nullptr;
  CHECK(mbsde_grid_uniform(1, 0, 2, 3, &bad) == MBSDE_ERR_ARGUMENT);
  CHECK(std::strlen(mbsde_last_error()) > 0);

  mbsde_generator* gen = nullptr;
  REQUIRE(mbsde_generator_build_1d(g, bs_mu, bs_sigma, nullptr, &gen) == MBSDE_OK);
  CHECK(mbsde_generator_states(gen) == 101);
  int valid = 0;
  size_t violations = 99;
  CHECK(mbsde_generator_check(gen, &valid, &violations) == MBSDE_OK);
  CHECK(valid == 1);
  CHECK(violations == 0);

  std::vector<double> terminal(101);
  for (int i = 0; i < 101; ++i) terminal[i] = std::max(nodes[i] - 100.0, 0.0);
  double r = 0.03;
  mbsde_trajectory* tr = nullptr;
  REQUIRE(mbsde_solve(gen, "hochost4", terminal.data(), terminal.size(), 1.0, 20, 100, rate_driver, &r, &tr) ==
          MBSDE_OK);
  CHECK(mbsde_trajectory_steps(tr) == 20);
  CHECK(mbsde_trajectory_time(tr, 20) == 1.0);
  std::vector<double> v(101);
  CHECK(mbsde_trajectory_values(tr, 0, v.data(), v.size()) == MBSDE_OK);
  CHECK(std::abs(v[50] - 9.4134) < 0.1);
  mbsde_trajectory_free(tr);

  tr = nullptr;
  CHECK(mbsde_solve(gen, "hochost4", terminal.data(), terminal.size(), 1.0, 4, 100, nan_driver, nullptr, &tr) ==
        MBSDE_ERR_NUMERIC);
  CHECK(tr == nullptr);
  CHECK(mbsde_solve(gen, "rk4", terminal.data(), terminal.size(), 1.0, 4, 100, nullptr, nullptr, &tr) ==
        MBSDE_ERR_ARGUMENT);
  CHECK(mbsde_solve(gen, "etd2rk", terminal.data(), 7, 1.0, 4, 100, nullptr, nullptr, &tr) == MBSDE_ERR_ARGUMENT);

  mbsde_generator_free(gen);
  mbsde_grid_free(g);
}

TEST_CASE("C API experiments") {
  CHECK(mbsde_config_check("{") == MBSDE_ERR_CONFIG);
  CHECK(std::string(mbsde_last_error()).find("line") != std::string::npos);
  mbsde_table* t = nullptr;
  REQUIRE(mbsde_presets_list(nullptr, &t) == MBSDE_OK);
  CHECK(std::string(mbsde_table_text(t)).find("bs_linear_table1") != std::string::npos);
  mbsde_table_free(t);
  const std::string dir = mbsde_preset_dir();
  t = nullptr;
  REQUIRE(mbsde_experiment_run_file((dir + "/bs_linear_table1.json").c_str(), "validate", 1, 0, &t) == MBSDE_OK);
  CHECK(mbsde_table_ok(t) == 1);
  CHECK(std::string(mbsde_table_output_path(t)) == "bs_linear_table1.csv");
  mbsde_table_free(t);
  CHECK(mbsde_experiment_run_file("/nonexistent.json", "solve", 1, 0, &t) != MBSDE_OK);
  CHECK(mbsde_experiment_run_json("{}", "bogus", 1, 0, &t) != MBSDE_OK);
  CHECK(std::strlen(mbsde_version()) > 0);
}
