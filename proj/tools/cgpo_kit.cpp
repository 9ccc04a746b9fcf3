// Copyright 2026 The cgpo-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cgpo-kit <subcommand> --config path.json [--out dir] [--seed n] [--max-dim n]

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

int run(const std::string& name, const std::string& config_path, const cgpo::cli::RunOptions& opt) {
  using cgpo::cli::json;
  json cfg = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cout << json{{"command", name}, {"error", {{"code", "io_error"}, {"message", "cannot open " + config_path}}},
                        {"exit_code", 1}}
                       .dump(2)
                << '\n';
      return cgpo::cli::kError;
    }
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      std::cout << json{{"command", name}, {"error", {{"code", "schema_violation"}, {"message", e.what()}}},
                        {"exit_code", 1}}
                       .dump(2)
                << '\n';
      return cgpo::cli::kError;
    }
  }
  const auto r = cgpo::cli::run_command(name, cfg, opt);
  std::cout << r.report.dump(2) << '\n';
  if (!opt.out_dir.empty()) cgpo::cli::write_outputs(r, opt.out_dir);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerics for covariant Gibbs-preserving state conversion"};
  app.set_version_flag("--version", std::string(cgpo::kVersion));
  app.require_subcommand(1);

  std::string config;
  cgpo::cli::RunOptions opt;
  std::size_t max_dim = 0;
  std::string chosen;

  for (const auto& [name, fn] : cgpo::cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "directory for report.json and CSV series");
    sub->add_option("--seed", opt.seed, "seed overriding the config");
    sub->add_option("--max-dim", max_dim, "dimension budget overriding CGPO_KIT_MAX_DIM");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cgpo::cli::kError;
  }
  for (const auto* sub : app.get_subcommands())
    if (sub->get_option("--seed")->count() > 0) opt.seed_given = true;
  if (max_dim > 0) cgpo::set_max_total_dim(max_dim);
  return run(chosen, config, opt);
}
