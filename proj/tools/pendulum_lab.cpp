/*
 Copyright 2026 The pendulum-lab Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// pendulum_lab: derive, design, train and benchmark cart-pendulum controllers.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pendulum_lab/config.hpp"
#include "pendulum_lab/io.hpp"
#include "pendulum_lab/pipeline.hpp"

namespace pl = pendulum_lab;

int main(int argc, char** argv) {
  CLI::App app{"Cart-pendulum modeling, LQR design, fuzzy controller training and benchmarking"};
  app.set_version_flag("--version", std::string(PENDULUM_LAB_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool auto_build = false;
  std::string controller = "lqr";
  std::string scenario = "impulse";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override data-split and noise seeds");
    sub->add_option("--out", out_dir, "artifact directory")->capture_default_str();
    sub->add_flag("--auto", auto_build, "build missing upstream artifacts");
  };

  auto* derive = app.add_subcommand("derive", "linearize, transfer functions, poles, controllability");
  auto* design = app.add_subcommand("design-lqr", "solve the Riccati equation and save the gain");
  auto* gen = app.add_subcommand("gen-data", "log LQR closed loops and sample the training set");
  auto* train = app.add_subcommand("train", "hybrid-train the fuzzy controller");
  auto* simulate = app.add_subcommand("simulate", "run one closed loop and write its time series");
  auto* bench = app.add_subcommand("benchmark", "PI / PID / TS-LA comparison table");
  for (auto* sub : {derive, design, gen, train, simulate, bench}) common(sub);
  simulate->add_option("--controller", controller, "controller")
      ->check(CLI::IsMember({"none", "lqr", "pi", "pid", "tsla"}))
      ->capture_default_str();
  simulate->add_option("--scenario", scenario, "disturbance scenario")
      ->check(CLI::IsMember({"impulse", "noise"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? pl::kExitOk : pl::kExitUsage;
  }

  return pl::run_guarded(
      [&]() -> int {
        pl::CommandContext ctx;
        if (!config_path.empty()) ctx.config = pl::RunConfig::from_json(pl::read_file(config_path));
        if (seed) ctx.config.set_seed(*seed);
        ctx.config.validate();
        ctx.out_dir = out_dir;
        ctx.auto_build = auto_build;
        ctx.log = &std::cout;

        if (derive->parsed()) return pl::cmd_derive(ctx);
        if (design->parsed()) return pl::cmd_design_lqr(ctx);
        if (gen->parsed()) return pl::cmd_gen_data(ctx);
        if (train->parsed()) return pl::cmd_train(ctx);
        if (simulate->parsed()) return pl::cmd_simulate(ctx, controller, scenario);
        return pl::cmd_benchmark(ctx);
      },
      std::cerr);
}
