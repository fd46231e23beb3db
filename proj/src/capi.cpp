// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde.h"

#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "markovbsde/experiment.hpp"
#include "markovbsde/generator.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/integrators.hpp"
#include "markovbsde/models.hpp"
#include "markovbsde/montecarlo.hpp"

struct mbsde_grid {
  mbsde::Grid1D grid;
};

struct mbsde_generator {
  mbsde::Generator gen;
  mbsde::DiffusionFn diffusion;
};

struct mbsde_trajectory {
  mbsde::Trajectory traj;
};

struct mbsde_table {
  std::string text;
  std::string output;
  bool ok = true;
};

namespace {

thread_local std::string g_last_error;

mbsde_status set_error(mbsde_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps exceptions to status codes at the boundary.
template <typename F>
mbsde_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MBSDE_OK;
  } catch (const mbsde::ConfigError& e) {
    return set_error(MBSDE_ERR_CONFIG, e.what());
  } catch (const mbsde::NumericError& e) {
    return set_error(MBSDE_ERR_NUMERIC, e.what());
  } catch (const mbsde::ArgumentError& e) {
    return set_error(MBSDE_ERR_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(MBSDE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MBSDE_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MBSDE_ERR_INTERNAL, "unknown error");
  }
}

void require(bool cond, const char* msg) {
  if (!cond) throw mbsde::ArgumentError(msg);
}

void run_experiment(const mbsde::ExperimentConfig& cfg, const std::string& mode,
                    int threads, bool with_timing, mbsde_table& table) {
  if (threads < 1) threads = mbsde::default_threads();
  std::ostringstream os;
  table.output = cfg.output;
  if (mode == "solve") {
    mbsde::write_results_csv(os, mbsde::run_solve(cfg, threads), with_timing);
  } else if (mode == "sparse") {
    mbsde::write_results_csv(os, mbsde::run_sparse(cfg, threads), with_timing);
  } else if (mode == "lsmc") {
    const mbsde::LsmcRuns runs = mbsde::run_lsmc(cfg, threads);
    mbsde::write_runs_csv(os, runs.estimates, runs.seeds);
  } else if (mode == "validate") {
    const mbsde::ValidationSummary s = mbsde::run_validate(cfg);
    mbsde::write_validation(os, s);
    table.ok = s.validity.valid;
  } else {
    throw mbsde::ArgumentError("unknown mode '" + mode + "'");
  }
  table.text = os.str();
}

}  // namespace

extern "C" {

const char* mbsde_last_error(void) { return g_last_error.c_str(); }

const char* mbsde_version(void) { return "0.1.0"; }

mbsde_status mbsde_grid_uniform(double left, double center, double right,
                                int half_count, mbsde_grid** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new mbsde_grid{mbsde::uniform_grid(left, center, right, half_count)};
  });
}

mbsde_status mbsde_grid_tavella_randall(double left, double center, double right,
                                        int half_count, double g1, double g2,
                                        mbsde_grid** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new mbsde_grid{
        mbsde::tavella_randall_grid(left, center, right, half_count, g1, g2)};
  });
}

mbsde_status mbsde_grid_concat(const mbsde_grid* a, const mbsde_grid* b,
                               mbsde_grid** out) {
  return guarded([&] {
    require(a && b && out, "null argument");
    *out = new mbsde_grid{mbsde::concat_grids(a->grid, b->grid)};
  });
}

size_t mbsde_grid_size(const mbsde_grid* g) { return g ? g->grid.size() : 0; }

mbsde_status mbsde_grid_nodes(const mbsde_grid* g, double* out, size_t capacity) {
  return guarded([&] {
    require(g && out, "null argument");
    const size_t n = std::min(capacity, g->grid.size());
    std::memcpy(out, g->grid.nodes().data(), n * sizeof(double));
  });
}

void mbsde_grid_free(mbsde_grid* g) { delete g; }

mbsde_status mbsde_generator_build_1d(const mbsde_grid* grid, mbsde_scalar_fn mu,
                                      mbsde_scalar_fn sigma, void* user,
                                      mbsde_generator** out) {
  return guarded([&] {
    require(grid && mu && sigma && out, "null argument");
    auto h = std::make_unique<mbsde_generator>(mbsde_generator{
        mbsde::build_generator_1d(
            grid->grid, [mu, user](double x) { return mu(x, user); },
            [sigma, user](double x) { return sigma(x, user); }),
        [sigma, user](const mbsde::Vector& x) {
          return mbsde::Matrix::Constant(1, 1, sigma(x[0], user));
        }});
    *out = h.release();
  });
}

mbsde_status mbsde_generator_build_nd(const mbsde_grid* const* axes, size_t dim,
                                      mbsde_drift_fn drift,
                                      mbsde_diffusion_fn diffusion, void* user,
                                      mbsde_generator** out) {
  return guarded([&] {
    require(axes && drift && diffusion && out && dim >= 1, "null argument");
    std::vector<mbsde::Grid1D> g;
    for (size_t p = 0; p < dim; ++p) {
      require(axes[p] != nullptr, "null axis");
      g.push_back(axes[p]->grid);
    }
    const int d = static_cast<int>(dim);
    mbsde::DriftFn dfn = [drift, user, d](const mbsde::Vector& x) {
      mbsde::Vector out(d);
      drift(x.data(), out.data(), user);
      return out;
    };
    mbsde::DiffusionFn sfn = [diffusion, user, d](const mbsde::Vector& x) {
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> s(d, d);
      diffusion(x.data(), s.data(), user);
      return mbsde::Matrix(s);
    };
    auto h = std::make_unique<mbsde_generator>(mbsde_generator{
        mbsde::build_generator_nd(mbsde::TensorGrid(std::move(g)), dfn, sfn), sfn});
    *out = h.release();
  });
}

size_t mbsde_generator_states(const mbsde_generator* g) {
  return g ? g->gen.dimension() : 0;
}

size_t mbsde_generator_nonzeros(const mbsde_generator* g) {
  return g ? static_cast<size_t>(g->gen.q.nonZeros()) : 0;
}

mbsde_status mbsde_generator_check(const mbsde_generator* g, int* valid,
                                   size_t* violations) {
  return guarded([&] {
    require(g && valid, "null argument");
    const mbsde::ValidityReport rep = mbsde::check_validity(g->gen.q);
    *valid = rep.valid ? 1 : 0;
    if (violations) *violations = rep.violations.size();
  });
}

mbsde_status mbsde_generator_point(const mbsde_generator* g, size_t i, double* out) {
  return guarded([&] {
    require(g && out, "null argument");
    require(i < g->gen.dimension(), "state index out of range");
    g->gen.grid().point(i, out);
  });
}

void mbsde_generator_free(mbsde_generator* g) { delete g; }

mbsde_status mbsde_solve(const mbsde_generator* g, const char* scheme,
                         const double* terminal, size_t n, double horizon,
                         int n_steps, int krylov_m, mbsde_driver_fn driver,
                         void* driver_user, mbsde_trajectory** out) {
  return guarded([&] {
    require(g && scheme && terminal && out, "null argument");
    require(n == g->gen.dimension(), "terminal length does not match the generator");
    require(n_steps >= 1, "n_steps must be >= 1");
    require(horizon > 0.0, "horizon must be positive");
    mbsde::BackwardProblem problem;
    problem.q = &g->gen.q;
    problem.terminal = Eigen::Map<const mbsde::Vector>(terminal, static_cast<Eigen::Index>(n));
    problem.horizon = horizon;
    if (driver) {
      mbsde::DriverSpec spec;
      spec.dim = static_cast<int>(g->gen.grid().dim());
      spec.f = [driver, driver_user](double t, const double* x, double y, const double* z) {
        return driver(t, x, y, z, driver_user);
      };
      problem.nonlinearity =
          mbsde::assemble_F(g->gen.grid(), g->gen.differences, g->diffusion, spec);
    }
    auto h = std::make_unique<mbsde_trajectory>(mbsde_trajectory{
        mbsde::solve_backward(mbsde::tableau(scheme), problem, n_steps, krylov_m)});
    *out = h.release();
  });
}

size_t mbsde_trajectory_steps(const mbsde_trajectory* t) {
  return t ? t->traj.n_steps() : 0;
}

double mbsde_trajectory_time(const mbsde_trajectory* t, size_t k) {
  if (!t || k >= t->traj.times.size()) return 0.0;
  return t->traj.times[k];
}

mbsde_status mbsde_trajectory_values(const mbsde_trajectory* t, size_t k, double* out,
                                     size_t capacity) {
  return guarded([&] {
    require(t && out, "null argument");
    require(k < t->traj.values.size(), "time index out of range");
    const mbsde::Vector& v = t->traj.values[k];
    const size_t n = std::min(capacity, static_cast<size_t>(v.size()));
    std::memcpy(out, v.data(), n * sizeof(double));
  });
}

void mbsde_trajectory_free(mbsde_trajectory* t) { delete t; }

mbsde_status mbsde_experiment_run_file(const char* path, const char* mode, int threads,
                                       int with_timing, mbsde_table** out) {
  return guarded([&] {
    require(path && mode && out, "null argument");
    auto table = std::make_unique<mbsde_table>();
    run_experiment(mbsde::load_config(path), mode, threads, with_timing != 0, *table);
    *out = table.release();
  });
}

mbsde_status mbsde_experiment_run_json(const char* json, const char* mode, int threads,
                                       int with_timing, mbsde_table** out) {
  return guarded([&] {
    require(json && mode && out, "null argument");
    auto table = std::make_unique<mbsde_table>();
    run_experiment(mbsde::parse_config(json), mode, threads, with_timing != 0, *table);
    *out = table.release();
  });
}

mbsde_status mbsde_config_check(const char* json) {
  return guarded([&] {
    require(json != nullptr, "null argument");
    mbsde::parse_config(json);
  });
}

const char* mbsde_preset_dir(void) {
  thread_local std::string dir;
  dir = mbsde::default_preset_dir();
  return dir.c_str();
}

mbsde_status mbsde_presets_list(const char* dir, mbsde_table** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    auto table = std::make_unique<mbsde_table>();
    const auto names =
        dir ? mbsde::list_presets(dir) : mbsde::list_presets(mbsde::default_preset_dir());
    for (const auto& n : names) table->text += n + "\n";
    *out = table.release();
  });
}

const char* mbsde_table_text(const mbsde_table* t) { return t ? t->text.c_str() : ""; }

int mbsde_table_ok(const mbsde_table* t) { return t && t->ok ? 1 : 0; }

const char* mbsde_table_output_path(const mbsde_table* t) {
  return t ? t->output.c_str() : "";
}

void mbsde_table_free(mbsde_table* t) { delete t; }

}  // extern "C"
