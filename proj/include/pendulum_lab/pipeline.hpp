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

#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pendulum_lab/anfis.hpp"
#include "pendulum_lab/config.hpp"
#include "pendulum_lab/controllers.hpp"
#include "pendulum_lab/plant.hpp"
#include "pendulum_lab/scenarios.hpp"

namespace pendulum_lab {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitDivergence = 3 };

namespace artifact {
inline constexpr const char* kDerive = "derive.json";
inline constexpr const char* kLqrDesign = "lqr_design.json";
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kSplit = "dataset_split.json";
inline constexpr const char* kModel = "anfis_model.json";
inline constexpr const char* kHistory = "training_history.csv";
inline constexpr const char* kBenchmarkCsv = "benchmark.csv";
inline constexpr const char* kBenchmarkText = "benchmark.txt";
}  // namespace artifact

struct CommandContext {
  RunConfig config;
  std::filesystem::path out_dir = "out";
  bool auto_build = false;
  std::ostream* log = nullptr;  // progress and reports; nullptr silences
};

struct DeriveReport {
  LinearStateSpace ss;
  PlantTransferFunctions tfs;
  std::vector<std::complex<double>> pendulum_poles;
  std::vector<std::complex<double>> cart_poles;
  ControllabilityReport co;
  std::vector<LocusPoint> pendulum_locus;
  std::vector<LocusPoint> cart_locus;
};

DeriveReport derive_model(const RunConfig& config);
std::string format_derive_report(const DeriveReport& report);

LqrDesign design_lqr(const RunConfig& config);

/// Stage-1 closed loops: one impulse run per configured magnitude plus one free run per
/// initial deviation, all under the LQR law.
std::vector<TimeSeries> collect_stage1_runs(const RunConfig& config, const LqrDesign& design);

Dataset generate_training_data(const RunConfig& config, const LqrDesign& design);

/// name in {none, lqr, pi, pid, tsla}; lqr and tsla need the corresponding artifact.
std::unique_ptr<Controller> make_controller(std::string_view name, const RunConfig& config,
                                            std::shared_ptr<const LqrDesign> lqr,
                                            std::shared_ptr<const AnfisModel> model);

/// "impulse" uses the first configured magnitude.
Scenario make_scenario(std::string_view name, const RunConfig& config);

/// One impulse scenario per configured magnitude followed by the noise scenario.
std::vector<Scenario> benchmark_scenarios(const RunConfig& config);

/// PI, PID and TS-LA in that order.
std::vector<BenchmarkEntry> benchmark_entries(const RunConfig& config,
                                              std::shared_ptr<const AnfisModel> model);

/// hardware_concurrency, capped by PENDULUM_LAB_THREADS when set.
unsigned benchmark_threads();

int cmd_derive(const CommandContext& ctx);
int cmd_design_lqr(const CommandContext& ctx);
int cmd_gen_data(const CommandContext& ctx);
int cmd_train(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx, std::string_view controller, std::string_view scenario);
int cmd_benchmark(const CommandContext& ctx);

/// Runs a command, mapping InvalidArgument to 1 and NumericalError to 2 (message to err).
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace pendulum_lab
