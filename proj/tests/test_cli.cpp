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

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pendulum_lab/config.hpp"
#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"
#include "pendulum_lab/pipeline.hpp"

namespace pendulum_lab {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pendulum_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PENDULUM_LAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, DefaultsValidateAndRoundTrip) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  const RunConfig d = RunConfig::from_json(c.to_json());
  EXPECT_EQ(d.to_json(), c.to_json());
  EXPECT_EQ(d.hash(), c.hash());
}

TEST(Config, ShippedFileEqualsDefaults) {
  const RunConfig c = RunConfig::from_json(read_file(fs::path(PENDULUM_LAB_SOURCE_DIR) / "configs/paper.json"));
  EXPECT_EQ(c.hash(), RunConfig{}.hash());
  EXPECT_EQ(c.plant.inertia, 0.006);
  EXPECT_EQ(c.lqr.q_diag[0], 1200.0);
  EXPECT_EQ(c.anfis.train.epochs, 50);
  EXPECT_EQ(c.anfis.train_count, 500);
  EXPECT_EQ(c.anfis.test_count, 91);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(RunConfig::from_json(R"({"plant": {"mass": 1.0}})"), InvalidArgument);
  EXPECT_THROW(RunConfig::from_json(R"({"solver": {}})"), InvalidArgument);
  EXPECT_NO_THROW(RunConfig::from_json(R"({"_comment": "x", "plant": {"_comment": "y"}})"));
}

TEST(Config, ZeroInertiaRejected) {
  EXPECT_THROW(RunConfig::from_json(R"({"plant": {"inertia": 0.0}})"), InvalidArgument);
}

TEST(Config, ZeroRRejected) {
  EXPECT_THROW(RunConfig::from_json(R"({"lqr": {"r": 0.0}})"), InvalidArgument);
}

TEST(Config, PartialOverrideKeepsDefaults) {
  const RunConfig c = RunConfig::from_json(R"({"sim": {"dt": 0.002}, "noise": {"power": 0.25}})");
  EXPECT_EQ(c.sim.dt, 0.002);
  EXPECT_EQ(c.noise.power, 0.25);
  EXPECT_EQ(c.sim.horizon, 40.0);
  EXPECT_NE(c.hash(), RunConfig{}.hash());
}

TEST(Config, MalformedJsonRejected) {
  EXPECT_THROW(RunConfig::from_json("{\"plant\": "), InvalidArgument);
  EXPECT_THROW(RunConfig::from_json(R"({"plant": {"inertia": "heavy"}})"), InvalidArgument);
}

TEST(Config, SeedOverride) {
  RunConfig c;
  c.set_seed(99);
  EXPECT_EQ(c.anfis.seed, 99u);
  EXPECT_EQ(c.noise.seed, 99u);
}

TEST(Pipeline, DeriveReportsReferencePolesAndRank) {
  const DeriveReport r = derive_model({});
  EXPECT_EQ(r.co.rank, 4);
  ASSERT_EQ(r.cart_poles.size(), 4u);
  const std::string text = format_derive_report(r);
  EXPECT_NE(text.find("controllability rank: 4"), std::string::npos);
  EXPECT_NE(text.find("5.5651"), std::string::npos);
}

TEST(Pipeline, FactoriesRejectUnknownNames) {
  const RunConfig c;
  EXPECT_THROW(make_controller("mpc", c, nullptr, nullptr), InvalidArgument);
  EXPECT_THROW(make_controller("lqr", c, nullptr, nullptr), InvalidArgument);
  EXPECT_THROW(make_scenario("gust", c), InvalidArgument);
  EXPECT_EQ(make_controller("none", c, nullptr, nullptr)->name(), "none");
}

TEST(Pipeline, MissingArtifactNamesFile) {
  CommandContext ctx;
  ctx.out_dir = scratch("missing");
  std::ostringstream err;
  EXPECT_EQ(run_guarded([&] { return cmd_train(ctx); }, err), kExitUsage);
  EXPECT_NE(err.str().find("dataset.csv"), std::string::npos) << err.str();
  err.str({});
  EXPECT_EQ(run_guarded([&] { return cmd_simulate(ctx, "lqr", "impulse"); }, err), kExitUsage);
  EXPECT_NE(err.str().find("lqr_design.json"), std::string::npos) << err.str();
}

TEST(Pipeline, StagesProduceArtifactsAndManifests) {
  CommandContext ctx;
  ctx.out_dir = scratch("stages");
  EXPECT_EQ(cmd_derive(ctx), kExitOk);
  EXPECT_EQ(cmd_design_lqr(ctx), kExitOk);
  EXPECT_EQ(cmd_gen_data(ctx), kExitOk);
  EXPECT_EQ(cmd_train(ctx), kExitOk);
  for (const char* f : {"derive.json", "poles_pendulum.csv", "poles_cart.csv", "locus_pendulum.csv",
                        "locus_cart.csv", "lqr_design.json", "dataset.csv", "dataset_split.json",
                        "anfis_model.json", "training_history.csv", "manifest_derive.json",
                        "manifest_design-lqr.json", "manifest_gen-data.json", "manifest_train.json"}) {
    EXPECT_TRUE(fs::exists(ctx.out_dir / f)) << f;
  }
  // A manifest is itself a valid configuration reproducing the run.
  const RunConfig back = RunConfig::from_json(read_file(ctx.out_dir / "manifest_train.json"));
  EXPECT_EQ(back.hash(), ctx.config.hash());
}

TEST(Pipeline, AutoBuildsUpstreamArtifacts) {
  CommandContext ctx;
  ctx.out_dir = scratch("auto");
  ctx.auto_build = true;
  EXPECT_EQ(cmd_simulate(ctx, "tsla", "impulse"), kExitOk);
  EXPECT_TRUE(fs::exists(ctx.out_dir / "anfis_model.json"));
  EXPECT_TRUE(fs::exists(ctx.out_dir / "timeseries_tsla_impulse.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("derive --out " + out.string()), 0);
  EXPECT_EQ(run_cli("simulate --controller foo --out " + out.string()), 1);
  EXPECT_EQ(run_cli("simulate --scenario gust --out " + out.string()), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("simulate --controller lqr --out " + out.string()), 1);
  EXPECT_EQ(run_cli("design-lqr --out " + out.string()), 0);
  EXPECT_EQ(run_cli("simulate --controller lqr --out " + out.string()), 0);

  const fs::path bad = out / "bad.json";
  write_file(bad, R"({"lqr": {"r": 0}})");
  EXPECT_EQ(run_cli("design-lqr --config " + bad.string() + " --out " + out.string()), 1);
  write_file(bad, R"({"plant": {"inertia": 0}})");
  EXPECT_EQ(run_cli("derive --config " + bad.string() + " --out " + out.string()), 1);
  write_file(bad, R"({"lqr": {"q_diag": [0, 0, 0, 0]}})");
  EXPECT_EQ(run_cli("design-lqr --config " + bad.string() + " --out " + out.string()), 2);
}

TEST(Cli, SimulateOutputsAreReproducible) {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  EXPECT_EQ(run_cli("simulate --controller pid --scenario noise --seed 5 --out " + a.string()), 0);
  EXPECT_EQ(run_cli("simulate --controller pid --scenario noise --seed 5 --out " + b.string()), 0);
  EXPECT_EQ(read_file(a / "timeseries_pid_noise.csv"), read_file(b / "timeseries_pid_noise.csv"));
}

}  // namespace
}  // namespace pendulum_lab
