// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "markovbsde/integrators.hpp"
#include "markovbsde/models.hpp"
#include "markovbsde/montecarlo.hpp"

#ifndef MBSDE_PRESET_DIR
#define MBSDE_PRESET_DIR "presets"
#endif

namespace mbsde {
namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError("field '" + field + "': " + msg);
}

// Object reader that records consumed keys so leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) fail(field(key), "missing");
    return *v;
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) fail(field(key), "missing");
      return *def;
    }
    if (!v->is_number()) fail(field(key), "expected a number");
    return v->get<double>();
  }

  long integer(const std::string& key, std::optional<long> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) fail(field(key), "missing");
      return *def;
    }
    if (!v->is_number_integer()) fail(field(key), "expected an integer");
    return v->get<long>();
  }

  std::string string(const std::string& key,
                     std::optional<std::string> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) fail(field(key), "missing");
      return *def;
    }
    if (!v->is_string()) fail(field(key), "expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(field(key), "expected true or false");
    return v->get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string index_field(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& expect_array(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array");
  return j;
}

std::vector<double> number_list(const json& j, const std::string& field) {
  expect_array(j, field);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(index_field(field, i), "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

std::vector<std::vector<double>> number_matrix(const json& j, const std::string& field) {
  expect_array(j, field);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number_list(j[i], index_field(field, i)));
  }
  return out;
}

std::vector<int> int_list(const json& j, const std::string& field) {
  expect_array(j, field);
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) fail(index_field(field, i), "expected an integer");
    out.push_back(j[i].get<int>());
  }
  return out;
}

AxisSpec parse_axis(const json& j, const std::string& field, bool family) {
  Obj o(j, field);
  AxisSpec a;
  a.kind = o.string("kind");
  if (a.kind == "concat") {
    if (family) fail(o.field("kind"), "concat axes cannot form a level family");
    const json& parts = expect_array(o.require("parts"), o.field("parts"));
    if (parts.size() < 2) fail(o.field("parts"), "needs at least two parts");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      a.parts.push_back(parse_axis(parts[i], index_field(o.field("parts"), i), false));
    }
  } else if (a.kind == "uniform" || a.kind == "tavella_randall") {
    a.left = o.number("left");
    a.center = o.number("center");
    a.right = o.number("right");
    if (!(a.left < a.center && a.center < a.right)) {
      fail(field, "requires left < center < right");
    }
    if (!family) {
      a.half_count = static_cast<int>(o.integer("half_count"));
      if (a.half_count < 1) fail(o.field("half_count"), "must be >= 1");
    }
    if (a.kind == "tavella_randall") {
      a.g1 = o.number("g1");
      a.g2 = o.number("g2");
      if (!(a.g1 > 0.0 && a.g2 > 0.0)) fail(field, "g1 and g2 must be positive");
    }
  } else {
    fail(o.field("kind"), "unknown axis kind '" + a.kind + "'");
  }
  o.finish();
  return a;
}

std::vector<AxisSpec> parse_axes(const json& j, const std::string& field, bool family) {
  expect_array(j, field);
  if (j.empty()) fail(field, "must not be empty");
  std::vector<AxisSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_axis(j[i], index_field(field, i), family));
  }
  return out;
}

const std::map<std::string, std::vector<std::string>>& model_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"black_scholes", {"mu", "sigma", "r"}},
      {"bs_rates", {"mu", "sigma", "r", "R"}},
      {"heston_sabr", {"b", "beta", "eta", "theta", "alpha", "rho", "r", "R"}},
      {"hyphyp", {"b", "beta", "kappa", "sigma0", "alpha", "rho", "r", "R"}},
      {"sabr", {"alpha", "beta", "rho", "r"}},
      {"basket_heston_sabr", {"r", "R"}},
  };
  return keys;
}

int model_dim(const std::string& type) {
  if (type == "black_scholes" || type == "bs_rates") return 1;
  if (type == "basket_heston_sabr") return 4;
  return 2;
}

std::map<std::string, double> parse_params(const json& j, const std::string& field,
                                           const std::vector<std::string>& keys) {
  Obj o(j, field);
  std::map<std::string, double> out;
  for (const std::string& k : keys) out[k] = o.number(k);
  o.finish();
  return out;
}

ModelSpec parse_model(const json& j) {
  Obj o(j, "model");
  ModelSpec m;
  m.type = o.string("type");
  auto it = model_keys().find(m.type);
  if (it == model_keys().end()) fail("model.type", "unknown model '" + m.type + "'");
  m.params = parse_params(o.require("params"), "model.params", it->second);
  if (m.type == "basket_heston_sabr") {
    const json& comps = expect_array(o.require("components"), "model.components");
    if (comps.size() != 2) fail("model.components", "needs exactly two entries");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      m.components.push_back(parse_params(comps[i], index_field("model.components", i),
                                          {"b", "beta", "eta", "theta", "alpha"}));
    }
    m.c_s = number_matrix(o.require("c_s"), "model.c_s");
    m.c_sv = number_matrix(o.require("c_sv"), "model.c_sv");
    m.c_v = number_matrix(o.require("c_v"), "model.c_v");
    m.lambda = number_list(o.require("lambda"), "model.lambda");
    if (m.lambda.size() != 2) fail("model.lambda", "needs two weights");
    for (const char* name : {"c_s", "c_sv", "c_v"}) {
      const auto& blk = std::string(name) == "c_s" ? m.c_s
                        : std::string(name) == "c_sv" ? m.c_sv
                                                      : m.c_v;
      if (blk.size() != 2 || blk[0].size() != 2 || blk[1].size() != 2) {
        fail(std::string("model.") + name, "must be a 2 x 2 matrix");
      }
    }
  }
  o.finish();
  return m;
}

PayoffSpec parse_payoff(const json& j) {
  Obj o(j, "payoff");
  PayoffSpec p;
  p.type = o.string("type");
  if (p.type == "call" || p.type == "put") {
    p.strike = o.number("strike");
  } else if (p.type == "call_combination") {
    p.lower = o.number("lower");
    p.upper = o.number("upper");
  } else {
    fail("payoff.type", "unknown payoff '" + p.type + "'");
  }
  o.finish();
  return p;
}

OracleSpec parse_oracle(const json& j) {
  Obj o(j, "oracle");
  OracleSpec s;
  s.type = o.string("type");
  if (s.type == "hagan") {
    s.beta_squared_z_exponent = o.boolean("beta_squared_z_exponent", false);
    s.alpha_squared_term = o.boolean("alpha_squared_term", true);
    s.rate_in_d = o.boolean("rate_in_d", false);
    s.forward_scale = o.number("forward_scale", 1.0);
    s.vol_scale = o.number("vol_scale", 1.0);
  } else if (s.type != "none" && s.type != "bs_analytic") {
    fail("oracle.type", "unknown oracle '" + s.type + "'");
  }
  o.finish();
  return s;
}

WindowSpec parse_window(const json& j) {
  Obj o(j, "window");
  WindowSpec w;
  const auto b = number_matrix(o.require("bounds"), "window.bounds");
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].size() != 2 || !(b[i][0] <= b[i][1])) {
      fail(index_field("window.bounds", i), "expected [low, high] with low <= high");
    }
    w.bounds.emplace_back(b[i][0], b[i][1]);
  }
  if (const json* g = o.find("grid")) w.grid = parse_axes(*g, "window.grid", false);
  o.finish();
  return w;
}

SparseSpec parse_sparse(const json& j) {
  Obj o(j, "sparse");
  SparseSpec s;
  s.q = int_list(o.require("q"), "sparse.q");
  if (s.q.empty()) fail("sparse.q", "must not be empty");
  s.axes = parse_axes(o.require("axes"), "sparse.axes", true);
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    if (s.q[i] < static_cast<int>(s.axes.size())) {
      fail(index_field("sparse.q", i), "must be >= the number of axes");
    }
  }
  o.finish();
  return s;
}

LsmcSpec parse_lsmc(const json& j) {
  Obj o(j, "lsmc");
  LsmcSpec s;
  s.n_paths = o.integer("n_paths");
  s.n_steps = static_cast<int>(o.integer("n_steps"));
  s.basis_degree = static_cast<int>(o.integer("basis_degree"));
  s.runs = static_cast<int>(o.integer("runs"));
  const long seed = o.integer("seed");
  if (s.n_paths < 2) fail("lsmc.n_paths", "must be >= 2");
  if (s.n_steps < 1) fail("lsmc.n_steps", "must be >= 1");
  if (s.basis_degree < 1) fail("lsmc.basis_degree", "must be >= 1");
  if (s.runs < 1) fail("lsmc.runs", "must be >= 1");
  if (seed < 0) fail("lsmc.seed", "must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  o.finish();
  return s;
}

// Cross-field checks that do not depend on the run mode.
void check_consistency(const ExperimentConfig& cfg) {
  const int d = model_dim(cfg.model.type);
  if (!cfg.grid.empty() && static_cast<int>(cfg.grid.size()) != d) {
    fail("grid", "model '" + cfg.model.type + "' needs " + std::to_string(d) + " axes");
  }
  if (cfg.sparse && static_cast<int>(cfg.sparse->axes.size()) != d) {
    fail("sparse.axes", "model '" + cfg.model.type + "' needs " + std::to_string(d) + " axes");
  }
  for (std::size_t i = 0; i < cfg.probes.size(); ++i) {
    if (static_cast<int>(cfg.probes[i].size()) != d) {
      fail(index_field("probes", i), "expected " + std::to_string(d) + " coordinates");
    }
  }
  if (cfg.window) {
    if (static_cast<int>(cfg.window->bounds.size()) != d) {
      fail("window.bounds", "expected one interval per axis");
    }
    if (!cfg.window->grid.empty() && static_cast<int>(cfg.window->grid.size()) != d) {
      fail("window.grid", "expected one axis per dimension");
    }
    if (cfg.oracle.type == "none") fail("window", "a window needs an oracle");
  }
  if (cfg.oracle.type == "bs_analytic") {
    if (cfg.model.type != "black_scholes") fail("oracle.type", "bs_analytic needs model black_scholes");
    if (cfg.payoff.type != "call") fail("oracle.type", "bs_analytic needs a call payoff");
  }
  if (cfg.oracle.type == "hagan") {
    if (cfg.model.type != "sabr") fail("oracle.type", "hagan needs model sabr");
    if (cfg.payoff.type != "call") fail("oracle.type", "hagan needs a call payoff");
  }
  if (cfg.krylov_m < 1) fail("krylov_m", "must be >= 1");
  if (!(cfg.horizon > 0.0)) fail("horizon", "must be positive");
}

json axis_json(const AxisSpec& a, bool family) {
  json j;
  j["kind"] = a.kind;
  if (a.kind == "concat") {
    j["parts"] = json::array();
    for (const auto& p : a.parts) j["parts"].push_back(axis_json(p, false));
    return j;
  }
  j["left"] = a.left;
  j["center"] = a.center;
  j["right"] = a.right;
  if (!family) j["half_count"] = a.half_count;
  if (a.kind == "tavella_randall") {
    j["g1"] = a.g1;
    j["g2"] = a.g2;
  }
  return j;
}

json axes_json(const std::vector<AxisSpec>& axes, bool family) {
  json j = json::array();
  for (const auto& a : axes) j.push_back(axis_json(a, family));
  return j;
}

std::string join_point(const std::vector<double>& x) {
  std::ostringstream os;
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ";" : "") << x[i];
  return os.str();
}

struct ModelParts {
  int dim = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  DriverSpec driver;
};

ModelParts model_parts(const ModelSpec& m) {
  const auto& p = m.params;
  ModelParts parts;
  parts.dim = model_dim(m.type);
  try {
    if (m.type == "black_scholes" || m.type == "bs_rates") {
      const double mu = p.at("mu");
      const double sigma = p.at("sigma");
      if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
      parts.drift = [mu](const Vector& x) { return Vector::Constant(1, mu * x[0]); };
      parts.diffusion = [sigma](const Vector& x) {
        return Matrix::Constant(1, 1, sigma * x[0]);
      };
      parts.driver = m.type == "black_scholes"
                         ? linear_driver(p.at("r"))
                         : nonlinear_rates_driver(mu, sigma, p.at("r"), p.at("R"));
    } else if (m.type == "heston_sabr" || m.type == "hyphyp" || m.type == "sabr") {
      SLVModel slv;
      if (m.type == "heston_sabr") {
        slv = heston_sabr(p.at("b"), p.at("beta"), p.at("eta"), p.at("theta"),
                          p.at("alpha"), p.at("rho"));
      } else if (m.type == "hyphyp") {
        slv = hyphyp(p.at("b"), p.at("beta"), p.at("kappa"), p.at("sigma0"),
                     p.at("alpha"), p.at("rho"));
      } else {
        slv = sabr(p.at("alpha"), p.at("beta"), p.at("rho"));
      }
      std::tie(parts.drift, parts.diffusion) = slv_assemble(slv);
      parts.driver = m.type == "sabr" ? linear_driver(p.at("r"), 2)
                                      : slv_driver(slv, p.at("r"), p.at("R"));
    } else if (m.type == "basket_heston_sabr") {
      std::vector<SLVModel> comps;
      for (const auto& c : m.components) {
        comps.push_back(heston_sabr(c.at("b"), c.at("beta"), c.at("eta"),
                                    c.at("theta"), c.at("alpha"), 0.0));
      }
      auto to_matrix = [](const std::vector<std::vector<double>>& v) {
        Matrix out(v.size(), v.empty() ? 0 : v[0].size());
        for (std::size_t i = 0; i < v.size(); ++i) {
          for (std::size_t k = 0; k < v[i].size(); ++k) out(i, k) = v[i][k];
        }
        return out;
      };
      const MultiAssetSLV multi(comps, to_matrix(m.c_s), to_matrix(m.c_sv),
                                to_matrix(m.c_v));
      const BasketTransform bt = basket_transform(m.lambda[0], m.lambda[1]);
      std::tie(parts.drift, parts.diffusion) = transformed_coefficients(multi, bt);
      parts.driver = transformed_driver(slv_driver(multi, p.at("r"), p.at("R")), bt);
    } else {
      fail("model.type", "unknown model '" + m.type + "'");
    }
  } catch (const ArgumentError& e) {
    fail("model", e.what());
  } catch (const std::out_of_range&) {
    fail("model.params", "missing parameter for model '" + m.type + "'");
  }
  return parts;
}

std::function<double(double)> payoff_fn(const PayoffSpec& p) {
  if (p.type == "call") return [K = p.strike](double s) { return call_payoff(s, K); };
  if (p.type == "put") return [K = p.strike](double s) { return put_payoff(s, K); };
  return [lo = p.lower, hi = p.upper](double s) {
    return call_combination_payoff(s, lo, hi);
  };
}

// Runs task(k) for k < count on up to `threads` workers; results are stored
// by index so the output order never depends on scheduling.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      try {
        task(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_schemes(const ExperimentConfig& cfg) {
  if (cfg.schemes.empty()) fail("schemes", "must not be empty");
  if (cfg.n_steps.empty()) fail("n_steps", "must not be empty");
  if (cfg.probes.empty()) fail("probes", "must not be empty");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": malformed JSON");
  }
  Obj o(root, "");
  ExperimentConfig cfg;
  cfg.name = o.string("name");
  cfg.description = o.string("description", "");
  cfg.model = parse_model(o.require("model"));
  cfg.payoff = parse_payoff(o.require("payoff"));
  cfg.horizon = o.number("horizon", 1.0);
  if (const json* g = o.find("grid")) cfg.grid = parse_axes(*g, "grid", false);
  if (const json* s = o.find("schemes")) {
    expect_array(*s, "schemes");
    const auto known = scheme_names();
    for (std::size_t i = 0; i < s->size(); ++i) {
      if (!(*s)[i].is_string()) fail(index_field("schemes", i), "expected a string");
      const std::string name = (*s)[i].get<std::string>();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        fail(index_field("schemes", i), "unknown scheme '" + name + "'");
      }
      cfg.schemes.push_back(name);
    }
  }
  if (const json* n = o.find("n_steps")) {
    cfg.n_steps = int_list(*n, "n_steps");
    if (cfg.n_steps.empty()) fail("n_steps", "must not be empty");
    for (std::size_t i = 0; i < cfg.n_steps.size(); ++i) {
      if (cfg.n_steps[i] < 1) fail(index_field("n_steps", i), "must be >= 1");
    }
  }
  cfg.krylov_m = static_cast<int>(o.integer("krylov_m", 100));
  if (const json* p = o.find("probes")) cfg.probes = number_matrix(*p, "probes");
  if (const json* q = o.find("oracle")) cfg.oracle = parse_oracle(*q);
  if (const json* w = o.find("window")) cfg.window = parse_window(*w);
  if (const json* s = o.find("sparse")) cfg.sparse = parse_sparse(*s);
  if (const json* l = o.find("lsmc")) cfg.lsmc = parse_lsmc(*l);
  cfg.output = o.string("output", "");
  o.finish();
  check_consistency(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  if (!cfg.description.empty()) j["description"] = cfg.description;
  json model;
  model["type"] = cfg.model.type;
  model["params"] = cfg.model.params;
  if (cfg.model.type == "basket_heston_sabr") {
    model["components"] = cfg.model.components;
    model["c_s"] = cfg.model.c_s;
    model["c_sv"] = cfg.model.c_sv;
    model["c_v"] = cfg.model.c_v;
    model["lambda"] = cfg.model.lambda;
  }
  j["model"] = model;
  json payoff;
  payoff["type"] = cfg.payoff.type;
  if (cfg.payoff.type == "call_combination") {
    payoff["lower"] = cfg.payoff.lower;
    payoff["upper"] = cfg.payoff.upper;
  } else {
    payoff["strike"] = cfg.payoff.strike;
  }
  j["payoff"] = payoff;
  j["horizon"] = cfg.horizon;
  if (!cfg.grid.empty()) j["grid"] = axes_json(cfg.grid, false);
  if (!cfg.schemes.empty()) j["schemes"] = cfg.schemes;
  if (!cfg.n_steps.empty()) j["n_steps"] = cfg.n_steps;
  j["krylov_m"] = cfg.krylov_m;
  if (!cfg.probes.empty()) j["probes"] = cfg.probes;
  json oracle;
  oracle["type"] = cfg.oracle.type;
  if (cfg.oracle.type == "hagan") {
    oracle["beta_squared_z_exponent"] = cfg.oracle.beta_squared_z_exponent;
    oracle["alpha_squared_term"] = cfg.oracle.alpha_squared_term;
    oracle["rate_in_d"] = cfg.oracle.rate_in_d;
    oracle["forward_scale"] = cfg.oracle.forward_scale;
    oracle["vol_scale"] = cfg.oracle.vol_scale;
  }
  j["oracle"] = oracle;
  if (cfg.window) {
    json w;
    w["bounds"] = json::array();
    for (const auto& [lo, hi] : cfg.window->bounds) w["bounds"].push_back({lo, hi});
    if (!cfg.window->grid.empty()) w["grid"] = axes_json(cfg.window->grid, false);
    j["window"] = w;
  }
  if (cfg.sparse) {
    j["sparse"] = {{"q", cfg.sparse->q}, {"axes", axes_json(cfg.sparse->axes, true)}};
  }
  if (cfg.lsmc) {
    j["lsmc"] = {{"n_paths", cfg.lsmc->n_paths},
                 {"n_steps", cfg.lsmc->n_steps},
                 {"basis_degree", cfg.lsmc->basis_degree},
                 {"runs", cfg.lsmc->runs},
                 {"seed", cfg.lsmc->seed}};
  }
  if (!cfg.output.empty()) j["output"] = cfg.output;
  return j.dump(2) + "\n";
}

Grid1D build_axis(const AxisSpec& spec) {
  try {
    if (spec.kind == "uniform") {
      return uniform_grid(spec.left, spec.center, spec.right, spec.half_count);
    }
    if (spec.kind == "tavella_randall") {
      return tavella_randall_grid(spec.left, spec.center, spec.right,
                                  spec.half_count, spec.g1, spec.g2);
    }
    if (spec.kind == "concat") {
      Grid1D acc = build_axis(spec.parts.at(0));
      for (std::size_t i = 1; i < spec.parts.size(); ++i) {
        acc = concat_grids(acc, build_axis(spec.parts[i]));
      }
      return acc;
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("grid axis: ") + e.what());
  }
  throw ConfigError("unknown axis kind '" + spec.kind + "'");
}

AxisFamily axis_family(const AxisSpec& spec) {
  return [spec](int level) {
    if (level < 1 || level > 30) throw ArgumentError("level out of range");
    AxisSpec s = spec;
    s.half_count = 1 << (level - 1);
    return build_axis(s);
  };
}

TensorGrid build_grid(const std::vector<AxisSpec>& axes) {
  std::vector<Grid1D> g;
  for (const auto& a : axes) g.push_back(build_axis(a));
  return TensorGrid(std::move(g));
}

BackwardProblem BuiltProblem::problem() const {
  BackwardProblem p;
  p.q = &generator.q;
  p.nonlinearity = nonlinearity;
  p.terminal = terminal;
  p.horizon = horizon;
  return p;
}

BuiltProblem build_problem(const ExperimentConfig& cfg, const TensorGrid& grid) {
  const ModelParts parts = model_parts(cfg.model);
  if (static_cast<int>(grid.dim()) != parts.dim) {
    throw ConfigError("grid dimension does not match model '" + cfg.model.type + "'");
  }
  BuiltProblem bp{build_generator_nd(grid, parts.drift, parts.diffusion), {},
                  Vector(grid.total_size()), cfg.horizon};
  bp.nonlinearity = assemble_F(grid, bp.generator.differences, parts.diffusion,
                               parts.driver);
  const auto g = payoff_fn(cfg.payoff);
  const std::size_t s0 = grid.stride(0);
  for (std::size_t i = 0; i < grid.total_size(); ++i) {
    bp.terminal[i] = g(grid.axis(0)[i / s0]);
  }
  return bp;
}

std::function<double(double, const std::vector<double>&)> make_oracle(
    const ExperimentConfig& cfg) {
  const auto& p = cfg.model.params;
  const double T = cfg.horizon;
  if (cfg.oracle.type == "bs_analytic") {
    const double K = cfg.payoff.strike;
    const double r = p.at("r");
    const double sigma = p.at("sigma");
    return [=](double t, const std::vector<double>& x) {
      return bs_analytic_price(x[0], t, K, r, sigma, T).price;
    };
  }
  if (cfg.oracle.type == "hagan") {
    const double K = cfg.payoff.strike;
    const double r = p.at("r");
    const double alpha = p.at("alpha");
    const double beta = p.at("beta");
    const double rho = p.at("rho");
    const OracleSpec o = cfg.oracle;
    const HaganOptions opt{o.beta_squared_z_exponent, o.alpha_squared_term, o.rate_in_d};
    return [=](double t, const std::vector<double>& x) {
      return hagan_sabr_price(o.forward_scale * x[0], o.vol_scale * x[1], t, K, T,
                              r, alpha, beta, rho, opt);
    };
  }
  return {};
}

double sup_error_window(
    const std::vector<double>& times,
    const std::function<double(std::size_t, const std::vector<double>&)>& numeric,
    const std::function<double(double, const std::vector<double>&)>& oracle,
    const TensorGrid& grid,
    const std::vector<std::pair<double, double>>& bounds) {
  const std::size_t d = grid.dim();
  if (bounds.size() != d) throw ArgumentError("window needs one interval per axis");
  std::vector<std::vector<double>> inside(d);
  for (std::size_t p = 0; p < d; ++p) {
    for (double x : grid.axis(p).nodes()) {
      if (x >= bounds[p].first && x <= bounds[p].second) inside[p].push_back(x);
    }
    if (inside[p].empty()) {
      throw ArgumentError("window does not intersect the grid on axis " + std::to_string(p));
    }
  }
  double sup = 0.0;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  for (;;) {
    for (std::size_t p = 0; p < d; ++p) x[p] = inside[p][idx[p]];
    for (std::size_t m = 0; m < times.size(); ++m) {
      const double err = std::abs(numeric(m, x) - oracle(times[m], x));
      if (!(err <= sup)) sup = err;  // keeps NaN visible
    }
    std::size_t p = d;
    while (p > 0) {
      --p;
      if (++idx[p] < inside[p].size()) break;
      idx[p] = 0;
      if (p == 0) return sup;
    }
  }
}

void write_results_csv(std::ostream& os, const ResultTable& table, bool with_timing) {
  os << (table.sparse ? "scheme,q,N_t,probe,value,abs_error,sup_error_window,points,wall_time\n"
                      : "scheme,N_t,probe,value,abs_error,sup_error_window,wall_time\n");
  auto num = [&os](double v) {
    if (std::isfinite(v)) os << v;
  };
  os << std::setprecision(12);
  for (const ResultRow& r : table.rows) {
    os << r.scheme << ',';
    if (table.sparse) os << r.q << ',';
    os << r.n_steps << ',' << r.probe << ',';
    num(r.value);
    os << ',';
    num(r.abs_error);
    os << ',';
    num(r.sup_error);
    os << ',';
    if (table.sparse) os << r.points << ',';
    if (with_timing) os << std::fixed << std::setprecision(3) << r.wall_time
                        << std::defaultfloat << std::setprecision(12);
    os << '\n';
  }
}

ResultTable run_solve(const ExperimentConfig& cfg, int threads) {
  check_schemes(cfg);
  if (cfg.grid.empty()) fail("grid", "missing");
  const TensorGrid grid = build_grid(cfg.grid);
  const BuiltProblem built = build_problem(cfg, grid);
  const BackwardProblem problem = built.problem();
  const auto oracle = make_oracle(cfg);
  std::optional<TensorGrid> wgrid;
  if (cfg.window && !cfg.window->grid.empty()) wgrid = build_grid(cfg.window->grid);

  struct Task {
    std::string scheme;
    int n_steps;
  };
  std::vector<Task> tasks;
  for (const auto& s : cfg.schemes) {
    for (int n : cfg.n_steps) tasks.push_back({s, n});
  }
  std::vector<std::vector<ResultRow>> out(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const ExpRKTableau tab = tableau(tasks[k].scheme);
    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = solve_backward(tab, problem, tasks[k].n_steps, cfg.krylov_m);
    const double wall = seconds_since(start);
    double sup = kNaN;
    if (cfg.window) {
      sup = sup_error_window(
          traj.times,
          [&](std::size_t m, const std::vector<double>& x) {
            return interpolate(grid, traj.values[m], x);
          },
          oracle, wgrid ? *wgrid : grid, cfg.window->bounds);
    }
    for (const auto& probe : cfg.probes) {
      ResultRow row;
      row.scheme = tasks[k].scheme;
      row.n_steps = tasks[k].n_steps;
      row.probe = join_point(probe);
      try {
        row.value = interpolate(grid, traj.values[0], probe);
      } catch (const ArgumentError& e) {
        fail("probes", e.what());
      }
      row.abs_error = oracle ? std::abs(row.value - oracle(0.0, probe)) : kNaN;
      row.sup_error = sup;
      row.points = static_cast<long>(grid.total_size());
      row.wall_time = wall;
      out[k].push_back(row);
    }
  });
  ResultTable table;
  for (auto& rows : out) {
    for (auto& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

ResultTable run_sparse(const ExperimentConfig& cfg, int threads) {
  check_schemes(cfg);
  if (!cfg.sparse) fail("sparse", "missing");
  if (cfg.window && cfg.window->grid.empty()) {
    fail("window.grid", "sparse runs need an explicit window grid");
  }
  const auto oracle = make_oracle(cfg);
  std::optional<TensorGrid> wgrid;
  if (cfg.window) wgrid = build_grid(cfg.window->grid);
  std::vector<AxisFamily> families;
  for (const auto& a : cfg.sparse->axes) families.push_back(axis_family(a));
  const ProblemFactory factory = [&cfg](const TensorGrid& grid) {
    auto bp = std::make_shared<BuiltProblem>(build_problem(cfg, grid));
    MemberProblem mp;
    mp.problem = bp->problem();
    mp.storage = bp;
    return mp;
  };

  ResultTable table;
  table.sparse = true;
  // Members are solved in parallel; the matrix itself runs in order.
  for (int q : cfg.sparse->q) {
    for (const auto& s : cfg.schemes) {
      const ExpRKTableau tab = tableau(s);
      for (int n : cfg.n_steps) {
        const auto start = std::chrono::steady_clock::now();
        const CombinationSolution sol =
            solve_combination(q, families, factory, tab, n, cfg.krylov_m, threads);
        const double wall = seconds_since(start);
        double sup = kNaN;
        if (cfg.window) {
          sup = sup_error_window(
              sol.members.front().trajectory.times,
              [&](std::size_t m, const std::vector<double>& x) {
                return evaluate_combined(sol, m, x);
              },
              oracle, *wgrid, cfg.window->bounds);
        }
        for (const auto& probe : cfg.probes) {
          ResultRow row;
          row.scheme = s;
          row.q = q;
          row.n_steps = n;
          row.probe = join_point(probe);
          try {
            row.value = evaluate_combined(sol, 0, probe);
          } catch (const ArgumentError& e) {
            fail("probes", e.what());
          }
          row.abs_error = oracle ? std::abs(row.value - oracle(0.0, probe)) : kNaN;
          row.sup_error = sup;
          row.points = sol.total_points();
          row.wall_time = wall;
          table.rows.push_back(row);
        }
      }
    }
  }
  return table;
}

LsmcRuns run_lsmc(const ExperimentConfig& cfg, int threads) {
  if (!cfg.lsmc) fail("lsmc", "missing");
  if (cfg.probes.empty()) fail("probes", "LSMC needs the start point as the first probe");
  if (cfg.model.type == "basket_heston_sabr") {
    fail("model.type", "LSMC runs support single-asset models only");
  }
  const ModelParts parts = model_parts(cfg.model);
  const int d = parts.dim;
  LSMCProblem prob;
  prob.dim = d;
  prob.drift = [drift = parts.drift, d](const double* x, double* out) {
    const Vector v = drift(Eigen::Map<const Vector>(x, d));
    for (int p = 0; p < d; ++p) out[p] = v[p];
  };
  prob.diffusion = [diff = parts.diffusion, d](const double* x, double* out) {
    const Matrix s = diff(Eigen::Map<const Vector>(x, d));
    for (int p = 0; p < d; ++p) {
      for (int q = 0; q < d; ++q) out[p * d + q] = s(p, q);
    }
  };
  prob.driver = parts.driver;
  prob.payoff = [g = payoff_fn(cfg.payoff)](const double* x) { return g(x[0]); };
  prob.x0 = cfg.probes.front();
  prob.horizon = cfg.horizon;

  const LsmcSpec& spec = *cfg.lsmc;
  LsmcRuns runs;
  runs.estimates.resize(spec.runs);
  runs.seeds.resize(spec.runs);
  std::vector<double> cond(spec.runs);
  parallel_for(spec.runs, threads, [&](std::size_t k) {
    LSMCConfig c{spec.n_paths, spec.n_steps, spec.basis_degree, spec.seed + k};
    const LSMCResult res = lsmc_solve(prob, c);
    runs.estimates[k] = res.y0;
    runs.seeds[k] = c.seed;
    cond[k] = res.max_condition;
  });
  runs.max_condition = *std::max_element(cond.begin(), cond.end());
  return runs;
}

ValidationSummary run_validate(const ExperimentConfig& cfg) {
  if (cfg.grid.empty()) fail("grid", "missing");
  const TensorGrid grid = build_grid(cfg.grid);
  const BuiltProblem built = build_problem(cfg, grid);
  ValidationSummary s;
  s.states = built.generator.dimension();
  s.nonzeros = static_cast<std::size_t>(built.generator.q.nonZeros());
  s.validity = check_validity(built.generator);
  s.structural = check_structural_condition(built.generator, &s.structural_violations);
  return s;
}

void write_validation(std::ostream& os, const ValidationSummary& s) {
  const ValidityReport& v = s.validity;
  os << "states: " << s.states << '\n'
     << "nonzeros: " << s.nonzeros << '\n'
     << "q_matrix: " << (v.valid ? "valid" : "invalid") << '\n';
  if (v.step_condition_checked) {
    os << "step_condition: " << (v.step_condition_holds ? "holds" : "fails")
       << " (max spacing " << v.max_spacing << ", bound " << v.step_bound << ")\n";
  }
  os << "structural_condition: " << (s.structural ? "holds" : "fails") << '\n';
  const std::size_t shown = 20;
  for (std::size_t i = 0; i < v.violations.size() && i < shown; ++i) {
    const Violation& x = v.violations[i];
    os << "  " << x.kind << " at (" << x.row << ", " << x.col << "): " << x.value << '\n';
  }
  if (v.violations.size() > shown) {
    os << "  ... " << v.violations.size() - shown << " more\n";
  }
  for (std::size_t i = 0; i < s.structural_violations.size() && i < shown; ++i) {
    const Violation& x = s.structural_violations[i];
    os << "  " << x.kind << " at (" << x.row << ", " << x.col << "): " << x.value << '\n';
  }
}

std::string default_preset_dir() {
  if (const char* env = std::getenv("MBSDE_PRESET_DIR")) {
    if (*env) return env;
  }
  return MBSDE_PRESET_DIR;
}

std::vector<std::string> list_presets(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      names.push_back(entry.path().stem().string());
    }
  }
  if (ec) throw ConfigError("cannot read preset directory '" + dir + "'");
  std::sort(names.begin(), names.end());
  return names;
}

int default_threads() {
  if (const char* env = std::getenv("MBSDE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

}  // namespace mbsde
