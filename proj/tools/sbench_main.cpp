// Copyright 2026 The SaliencyBench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sbench: command-line front end of the toolkit.
//
//   sbench <dataset-gen|train|explain|evaluate|cleverhans|bridge-check>
//          --config run.json [--out DIR] [--workers N] [--seed-override S]
//
// SALIENCYBENCH_LOG sets the log level (trace, debug, info, warn, error, off).

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "saliencybench/runner.hpp"
#include "saliencybench/simd/kernels.hpp"

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("sbench");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("SALIENCYBENCH_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  CLI::App app{"Saliency map computation and evaluation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::size_t workers = 0;
  std::uint64_t seed = 0;

  using Command = std::function<int(const sbench::RunConfig&)>;
  const std::map<std::string, std::pair<const char*, Command>> commands{
      {"dataset-gen", {"Generate an eBAM-lite dataset", sbench::cmd_dataset_gen}},
      {"train", {"Train the reference micro-CNN", sbench::cmd_train}},
      {"explain", {"Write saliency maps for a few samples", sbench::cmd_explain}},
      {"evaluate", {"Compute metric reports and curves", sbench::cmd_evaluate}},
      {"cleverhans", {"Flag confident, badly localized, faithful samples",
                      sbench::cmd_cleverhans}},
      {"bridge-check", {"Check a model bridge for protocol conformance",
                        sbench::cmd_bridge_check}},
  };
  std::map<CLI::App*, const Command*> dispatch;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--workers", workers, "Worker threads (overrides workers)");
    sub->add_option("--seed-override", seed, "Replace the configured seed");
    dispatch[sub] = &entry.second;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sbench::kExitConfig;
  }

  try {
    sbench::RunConfig config = sbench::load_run_config(config_path);
    sbench::CliOverrides overrides;
    if (!out_dir.empty()) overrides.output_dir = out_dir;
    if (app.get_subcommands().front()->count("--workers")) overrides.workers = workers;
    if (app.get_subcommands().front()->count("--seed-override")) overrides.seed = seed;
    sbench::apply_overrides(config, overrides);
    spdlog::debug("kernels: {}", sbench::simd::isa_name(sbench::simd::kernels().isa));
    return (*dispatch.at(app.get_subcommands().front()))(config);
  } catch (const sbench::Error& e) {
    spdlog::error("{}: {}", sbench::error_code_name(e.code()), e.what());
    return sbench::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return sbench::kExitFailure;
  }
}
