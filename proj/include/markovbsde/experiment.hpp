// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_EXPERIMENT_HPP_
#define MARKOVBSDE_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/generator.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/sparsegrid.hpp"

namespace mbsde {

// kind: "uniform", "tavella_randall" or "concat" (parts). In a sparse block
// half_count is omitted and set to 2^(level-1).
struct AxisSpec {
  std::string kind;
  double left = 0.0;
  double center = 0.0;
  double right = 0.0;
  int half_count = 0;
  double g1 = 1.0;
  double g2 = 1.0;
  std::vector<AxisSpec> parts;
  bool operator==(const AxisSpec&) const = default;
};

// type: black_scholes, bs_rates, heston_sabr, hyphyp, sabr,
// basket_heston_sabr. Scalar parameters live in params; the basket model
// also uses components, the correlation blocks and lambda.
struct ModelSpec {
  std::string type;
  std::map<std::string, double> params;
  std::vector<std::map<std::string, double>> components;
  std::vector<std::vector<double>> c_s;
  std::vector<std::vector<double>> c_sv;
  std::vector<std::vector<double>> c_v;
  std::vector<double> lambda;
  bool operator==(const ModelSpec&) const = default;
};

// Payoff of the first state coordinate: call, put or call_combination.
struct PayoffSpec {
  std::string type;
  double strike = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const PayoffSpec&) const = default;
};

// type: none, bs_analytic or hagan. The Hagan oracle is evaluated at
// (forward_scale * s, vol_scale * v).
struct OracleSpec {
  std::string type = "none";
  bool beta_squared_z_exponent = false;
  bool alpha_squared_term = true;
  bool rate_in_d = false;
  double forward_scale = 1.0;
  double vol_scale = 1.0;
  bool operator==(const OracleSpec&) const = default;
};

// Closed box per axis; errors are measured at the nodes of `grid` (the
// solve grid when empty) that fall inside it, at every time step.
struct WindowSpec {
  std::vector<std::pair<double, double>> bounds;
  std::vector<AxisSpec> grid;
  bool operator==(const WindowSpec&) const = default;
};

struct SparseSpec {
  std::vector<int> q;
  std::vector<AxisSpec> axes;
  bool operator==(const SparseSpec&) const = default;
};

struct LsmcSpec {
  long n_paths = 0;
  int n_steps = 0;
  int basis_degree = 0;
  int runs = 0;
  std::uint64_t seed = 0;
  bool operator==(const LsmcSpec&) const = default;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  ModelSpec model;
  PayoffSpec payoff;
  double horizon = 1.0;
  std::vector<AxisSpec> grid;
  std::vector<std::string> schemes;
  std::vector<int> n_steps;
  int krylov_m = 100;
  std::vector<std::vector<double>> probes;
  OracleSpec oracle;
  std::optional<WindowSpec> window;
  std::optional<SparseSpec> sparse;
  std::optional<LsmcSpec> lsmc;
  std::string output;
  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError naming the line or the field at fault.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

Grid1D build_axis(const AxisSpec& spec);
AxisFamily axis_family(const AxisSpec& spec);
TensorGrid build_grid(const std::vector<AxisSpec>& axes);

// Generator, nonlinearity and terminal values of the configured model on grid.
struct BuiltProblem {
  Generator generator;
  Nonlinearity nonlinearity;
  Vector terminal;
  double horizon = 1.0;
  BackwardProblem problem() const;
};
BuiltProblem build_problem(const ExperimentConfig& cfg, const TensorGrid& grid);

// Reference value at (t, x); empty when the oracle type is none.
std::function<double(double, const std::vector<double>&)> make_oracle(
    const ExperimentConfig& cfg);

// max |numeric(m, x) - oracle(t_m, x)| over all time indices and the
// window nodes. Throws ArgumentError when no node lies in the window.
double sup_error_window(
    const std::vector<double>& times,
    const std::function<double(std::size_t, const std::vector<double>&)>& numeric,
    const std::function<double(double, const std::vector<double>&)>& oracle,
    const TensorGrid& grid,
    const std::vector<std::pair<double, double>>& bounds);

struct ResultRow {
  std::string scheme;
  int q = 0;                 // 0 for full-grid solves
  int n_steps = 0;
  std::string probe;         // coordinates joined by ';'
  double value = 0.0;
  double abs_error = 0.0;    // NaN without an oracle
  double sup_error = 0.0;    // NaN without a window
  long points = 0;
  double wall_time = 0.0;
};

struct ResultTable {
  bool sparse = false;
  std::vector<ResultRow> rows;
};

// solve:  scheme,N_t,probe,value,abs_error,sup_error_window,wall_time
// sparse: scheme,q,N_t,probe,value,abs_error,sup_error_window,points,wall_time
// NaN fields are empty; wall_time is empty when with_timing is false.
void write_results_csv(std::ostream& os, const ResultTable& table,
                       bool with_timing = true);

ResultTable run_solve(const ExperimentConfig& cfg, int threads = 1);
ResultTable run_sparse(const ExperimentConfig& cfg, int threads = 1);

struct LsmcRuns {
  std::vector<double> estimates;
  std::vector<std::uint64_t> seeds;
  double max_condition = 0.0;
};
LsmcRuns run_lsmc(const ExperimentConfig& cfg, int threads = 1);

struct ValidationSummary {
  std::size_t states = 0;
  std::size_t nonzeros = 0;
  ValidityReport validity;
  bool structural = true;
  std::vector<Violation> structural_violations;
};
ValidationSummary run_validate(const ExperimentConfig& cfg);
void write_validation(std::ostream& os, const ValidationSummary& s);

std::string default_preset_dir();
// Preset names (file stems) in dir, sorted.
std::vector<std::string> list_presets(const std::string& dir = default_preset_dir());

// Thread count from MBSDE_THREADS, else 1.
int default_threads();

}  // namespace mbsde

#endif  // MARKOVBSDE_EXPERIMENT_HPP_
