// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

// Command-line experiment runner on top of the C API.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "markovbsde.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int exit_code(mbsde_status s) {
  switch (s) {
    case MBSDE_OK:
      return 0;
    case MBSDE_ERR_CONFIG:
    case MBSDE_ERR_ARGUMENT:
      return kExitConfig;
    case MBSDE_ERR_NUMERIC:
      return kExitNumeric;
    default:
      return kExitFailure;
  }
}

// A path to an existing file, or the name of a preset.
std::string resolve_config(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) return arg;
  const fs::path preset = fs::path(mbsde_preset_dir()) / (arg + ".json");
  if (fs::exists(preset)) return preset.string();
  return arg;
}

struct RunOptions {
  std::string config;
  std::string output;
  int threads = 0;
  bool no_timing = false;
};

int run(const std::string& mode, const RunOptions& opt) {
  mbsde_table* table = nullptr;
  const mbsde_status s = mbsde_experiment_run_file(
      resolve_config(opt.config).c_str(), mode.c_str(), opt.threads,
      opt.no_timing ? 0 : 1, &table);
  if (s != MBSDE_OK) {
    std::cerr << "mbsde " << mode << ": " << mbsde_last_error() << '\n';
    return exit_code(s);
  }
  std::string out = opt.output;
  if (out.empty() && mode != "validate") out = mbsde_table_output_path(table);
  int code = mbsde_table_ok(table) ? 0 : kExitNumeric;
  if (out.empty() || out == "-") {
    std::cout << mbsde_table_text(table);
  } else {
    std::ofstream f(out);
    f << mbsde_table_text(table);
    if (!f) {
      std::cerr << "mbsde " << mode << ": cannot write '" << out << "'\n";
      code = kExitFailure;
    }
  }
  mbsde_table_free(table);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backward solvers for Markov BSDEs on finite-state chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mbsde_version()));

  RunOptions opt;
  std::string chosen;
  for (const char* mode : {"solve", "sparse", "lsmc", "validate"}) {
    const std::string m = mode;
    const std::string help =
        m == "solve"      ? "Full-grid solves over the scheme x N_t matrix"
        : m == "sparse"   ? "Sparse-grid combination solves"
        : m == "lsmc"     ? "Least-squares Monte Carlo reference runs"
                          : "Q-matrix validity report for the configured grid";
    CLI::App* sub = app.add_subcommand(m, help);
    sub->add_option("config", opt.config, "Config file or preset name")->required();
    if (m != "validate") {
      sub->add_option("-o,--output", opt.output, "CSV destination ('-' for stdout)");
      sub->add_option("-t,--threads", opt.threads,
                      "Worker threads (default: MBSDE_THREADS or 1)")
          ->check(CLI::Range(1, 1024));
    }
    if (m == "solve" || m == "sparse") {
      sub->add_flag("--no-timing", opt.no_timing, "Leave wall_time empty");
    }
    sub->callback([&chosen, m] { chosen = m; });
  }

  CLI::App* presets = app.add_subcommand("presets", "Preset configurations");
  presets->require_subcommand(1);
  std::string preset_dir;
  CLI::App* list = presets->add_subcommand("list", "List preset names");
  list->add_option("--dir", preset_dir, "Preset directory");
  list->callback([&chosen] { chosen = "presets"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (chosen == "presets") {
    mbsde_table* table = nullptr;
    const mbsde_status s =
        mbsde_presets_list(preset_dir.empty() ? nullptr : preset_dir.c_str(), &table);
    if (s != MBSDE_OK) {
      std::cerr << "mbsde presets list: " << mbsde_last_error() << '\n';
      return exit_code(s);
    }
    std::cout << mbsde_table_text(table);
    mbsde_table_free(table);
    return 0;
  }
  return run(chosen, opt);
}
