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

#include "pendulum_lab/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"

namespace pendulum_lab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ostream& null_stream() {
  static std::ostringstream sink;
  sink.str({});
  return sink;
}

std::ostream& log_of(const CommandContext& ctx) { return ctx.log ? *ctx.log : null_stream(); }

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void write_manifest(const CommandContext& ctx, const std::string& command, const json& args = json::object()) {
  json doc = {{"manifest",
               {{"command", command},
                {"version", PENDULUM_LAB_VERSION},
                {"config_hash", hex64(ctx.config.hash())},
                {"seed", ctx.config.anfis.seed},
                {"noise_seed", ctx.config.noise.seed},
                {"args", args}}},
              {"config", json::parse(ctx.config.to_json())}};
  write_file(ctx.out_dir / ("manifest_" + command + ".json"), doc.dump(2) + "\n");
}

json complex_list(const std::vector<std::complex<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back({v.real(), v.imag()});
  return out;
}

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string complex_text(const std::complex<double>& z) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << z.real();
  if (z.imag() != 0.0) s << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return s.str();
}

fs::path require_artifact(const CommandContext& ctx, const char* name) {
  const fs::path path = ctx.out_dir / name;
  if (!fs::exists(path)) {
    throw InvalidArgument("missing artifact '" + path.string() + "'");
  }
  return path;
}

std::shared_ptr<const LqrDesign> obtain_lqr(const CommandContext& ctx) {
  const fs::path path = ctx.out_dir / artifact::kLqrDesign;
  if (!fs::exists(path) && ctx.auto_build) {
    log_of(ctx) << "[auto] designing LQR\n";
    if (int rc = cmd_design_lqr(ctx); rc != kExitOk) throw NumericalError("auto LQR design failed");
  }
  return std::make_shared<const LqrDesign>(
      lqr_design_from_json(read_file(require_artifact(ctx, artifact::kLqrDesign))));
}

Dataset load_dataset(const CommandContext& ctx) {
  const fs::path split_path = ctx.out_dir / artifact::kSplit;
  if (!fs::exists(ctx.out_dir / artifact::kDataset) && ctx.auto_build) {
    log_of(ctx) << "[auto] generating stage-1 data\n";
    if (int rc = cmd_gen_data(ctx); rc != kExitOk) throw NumericalError("auto data generation failed");
  }
  const std::string csv = read_file(require_artifact(ctx, artifact::kDataset));
  json split;
  try {
    split = json::parse(read_file(require_artifact(ctx, artifact::kSplit)));
  } catch (const json::parse_error& e) {
    throw InvalidArgument("dataset split: malformed JSON at byte " + std::to_string(e.byte));
  }
  std::istringstream in(csv);
  Dataset data = Dataset::read_csv(in, split.value("train_count", Eigen::Index{0}));
  if (static_cast<Eigen::Index>(data.test.size()) != split.value("test_count", Eigen::Index{-1})) {
    throw InvalidArgument("dataset: row count disagrees with '" + split_path.string() + "'");
  }
  return data;
}

std::shared_ptr<const AnfisModel> obtain_model(const CommandContext& ctx) {
  const fs::path path = ctx.out_dir / artifact::kModel;
  if (!fs::exists(path) && ctx.auto_build) {
    log_of(ctx) << "[auto] training fuzzy model\n";
    if (int rc = cmd_train(ctx); rc != kExitOk) throw NumericalError("auto training failed");
  }
  return std::make_shared<const AnfisModel>(
      anfis_model_from_json(read_file(require_artifact(ctx, artifact::kModel))));
}

}  // namespace

// ---------------------------------------------------------------------------------------

DeriveReport derive_model(const RunConfig& config) {
  DeriveReport r;
  r.ss = linearize(config.plant);
  r.tfs = transfer_functions(config.plant);
  r.pendulum_poles = poles(r.tfs.pendulum);
  r.cart_poles = poles(r.tfs.cart);
  r.co = controllability(r.ss);
  r.pendulum_locus = root_locus_sweep(r.tfs.pendulum, config.locus_gains);
  r.cart_locus = root_locus_sweep(r.tfs.cart, config.locus_gains);
  return r;
}

std::string format_derive_report(const DeriveReport& r) {
  std::ostringstream out;
  const Eigen::IOFormat fmt(6, 0, "  ", "\n", "  [", "]");
  out << "A (deviation coordinates x, x_dot, phi, phi_dot):\n" << r.ss.A.format(fmt) << "\n";
  out << "B:\n" << r.ss.B.transpose().format(fmt) << "\n";
  auto coeffs = [&](const char* label, const std::vector<double>& c) {
    out << label;
    for (double v : c) out << ' ' << std::setprecision(6) << v;
    out << '\n';
  };
  coeffs("pendulum TF numerator:  ", r.tfs.pendulum.numerator);
  coeffs("pendulum TF denominator:", r.tfs.pendulum.denominator);
  coeffs("cart TF numerator:      ", r.tfs.cart.numerator);
  coeffs("cart TF denominator:    ", r.tfs.cart.denominator);
  out << "pendulum poles:";
  for (const auto& p : r.pendulum_poles) out << "  " << complex_text(p);
  out << "\ncart poles:";
  for (const auto& p : r.cart_poles) out << "  " << complex_text(p);
  out << "\ncontrollability matrix:\n" << r.co.matrix.format(fmt) << "\n";
  out << "controllability rank: " << r.co.rank << "\n";
  out << "controllability determinant: " << std::setprecision(8) << r.co.determinant << "\n";
  return out.str();
}

LqrDesign design_lqr(const RunConfig& config) {
  return design_lqr(linearize(config.plant), config.lqr.Q(), config.lqr.r);
}

std::vector<TimeSeries> collect_stage1_runs(const RunConfig& config, const LqrDesign& design) {
  auto shared = std::make_shared<const LqrDesign>(design);
  SimConfig sim = config.sim;
  sim.horizon = config.data.horizon;
  sim.log_decimation = config.data.log_decimation;

  std::vector<TimeSeries> runs;
  for (double magnitude : config.data.impulse_magnitudes) {
    LqrController controller(shared);
    sim.initial_state = PlantState{};
    const ImpulseSpec spec{config.data.onset, magnitude, config.data.width};
    runs.push_back(run_closed_loop(
        sim, controller, [spec](double t) { return impulse_signal(spec, t); }, config.plant));
  }
  for (const auto& dev : config.data.initial_deviations) {
    LqrController controller(shared);
    sim.initial_state = {dev[0], dev[1], std::numbers::pi + dev[2], dev[3], 0.0};
    runs.push_back(run_closed_loop(sim, controller, nullptr, config.plant));
  }
  return runs;
}

Dataset generate_training_data(const RunConfig& config, const LqrDesign& design) {
  const auto runs = collect_stage1_runs(config, design);
  return generate_dataset(runs, config.anfis.train_count, config.anfis.test_count, config.anfis.seed);
}

std::unique_ptr<Controller> make_controller(std::string_view name, const RunConfig& config,
                                            std::shared_ptr<const LqrDesign> lqr,
                                            std::shared_ptr<const AnfisModel> model) {
  if (name == "none") return std::make_unique<NullController>();
  if (name == "pi") return std::make_unique<PidController>(config.pi, "pi");
  if (name == "pid") return std::make_unique<PidController>(config.pid, "pid");
  if (name == "lqr") {
    if (!lqr) throw InvalidArgument("controller 'lqr' needs an LQR design");
    return std::make_unique<LqrController>(std::move(lqr));
  }
  if (name == "tsla") {
    if (!model) throw InvalidArgument("controller 'tsla' needs a trained fuzzy model");
    return std::make_unique<AnfisController>(std::move(model));
  }
  throw InvalidArgument("unknown controller '" + std::string(name) + "'");
}

Scenario make_scenario(std::string_view name, const RunConfig& config) {
  Scenario s;
  if (name == "impulse") {
    s.kind = Scenario::Kind::kImpulse;
    s.impulse = {config.impulse.onset, config.impulse.magnitudes.front(), config.impulse.width};
  } else if (name == "noise") {
    s.kind = Scenario::Kind::kNoise;
    s.noise = config.noise;
  } else {
    throw InvalidArgument("unknown scenario '" + std::string(name) + "'");
  }
  return s;
}

std::vector<Scenario> benchmark_scenarios(const RunConfig& config) {
  std::vector<Scenario> out;
  for (double m : config.impulse.magnitudes) {
    Scenario s;
    s.impulse = {config.impulse.onset, m, config.impulse.width};
    out.push_back(s);
  }
  out.push_back(make_scenario("noise", config));
  return out;
}

std::vector<BenchmarkEntry> benchmark_entries(const RunConfig& config,
                                              std::shared_ptr<const AnfisModel> model) {
  return {{"PI", std::make_shared<PidController>(config.pi, "pi")},
          {"PID", std::make_shared<PidController>(config.pid, "pid")},
          {"TS-LA", std::make_shared<AnfisController>(std::move(model))}};
}

unsigned benchmark_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("PENDULUM_LAB_THREADS")) {
    const int v = std::atoi(cap);
    if (v >= 1) n = std::min(n, static_cast<unsigned>(v));
  }
  return n;
}

// ---------------------------------------------------------------------------------------
// Commands

int cmd_derive(const CommandContext& ctx) {
  const DeriveReport r = derive_model(ctx.config);
  log_of(ctx) << format_derive_report(r);

  json doc = {{"A", matrix_json(r.ss.A)},
              {"B", matrix_json(r.ss.B)},
              {"C", matrix_json(r.ss.C)},
              {"D", matrix_json(r.ss.D)},
              {"pendulum_tf", {{"numerator", r.tfs.pendulum.numerator}, {"denominator", r.tfs.pendulum.denominator}}},
              {"cart_tf", {{"numerator", r.tfs.cart.numerator}, {"denominator", r.tfs.cart.denominator}}},
              {"pendulum_poles", complex_list(r.pendulum_poles)},
              {"cart_poles", complex_list(r.cart_poles)},
              {"controllability", {{"matrix", matrix_json(r.co.matrix)}, {"rank", r.co.rank}, {"determinant", r.co.determinant}}}};
  write_file(ctx.out_dir / artifact::kDerive, doc.dump(2) + "\n");

  std::ostringstream csv;
  write_poles_csv(csv, r.pendulum_poles);
  write_file(ctx.out_dir / "poles_pendulum.csv", csv.str());
  csv.str({});
  write_poles_csv(csv, r.cart_poles);
  write_file(ctx.out_dir / "poles_cart.csv", csv.str());
  csv.str({});
  write_locus_csv(csv, r.pendulum_locus);
  write_file(ctx.out_dir / "locus_pendulum.csv", csv.str());
  csv.str({});
  write_locus_csv(csv, r.cart_locus);
  write_file(ctx.out_dir / "locus_cart.csv", csv.str());
  write_manifest(ctx, "derive");
  return kExitOk;
}

int cmd_design_lqr(const CommandContext& ctx) {
  const LinearStateSpace ss = linearize(ctx.config.plant);
  const LqrDesign design = design_lqr(ss, ctx.config.lqr.Q(), ctx.config.lqr.r);
  auto& log = log_of(ctx);
  log << "K = [" << std::setprecision(10) << design.K(0) << ", " << design.K(1) << ", "
      << design.K(2) << ", " << design.K(3) << "]\n";
  log << "Riccati residual = " << std::setprecision(3) << design.residual << " after "
      << design.iterations << " Newton-Kleinman iteration(s)\n";
  log << "closed-loop eigenvalues:";
  for (const auto& e : design.closed_loop_eigenvalues(ss)) log << "  " << complex_text(e);
  log << '\n';
  write_file(ctx.out_dir / artifact::kLqrDesign, lqr_design_to_json(design));
  write_manifest(ctx, "design-lqr");
  return kExitOk;
}

int cmd_gen_data(const CommandContext& ctx) {
  const auto design = obtain_lqr(ctx);
  const Dataset data = generate_training_data(ctx.config, *design);
  std::ostringstream csv;
  data.write_csv(csv);
  write_file(ctx.out_dir / artifact::kDataset, csv.str());
  const json split = {{"train_count", data.train.size()},
                      {"test_count", data.test.size()},
                      {"seed", ctx.config.anfis.seed},
                      {"train_rows", {0, data.train.size()}},
                      {"test_rows", {data.train.size(), data.size()}}};
  write_file(ctx.out_dir / artifact::kSplit, split.dump(2) + "\n");
  log_of(ctx) << "wrote " << data.train.size() << " training and " << data.test.size()
              << " test rows to " << (ctx.out_dir / artifact::kDataset).string() << '\n';
  write_manifest(ctx, "gen-data");
  return kExitOk;
}

int cmd_train(const CommandContext& ctx) {
  const Dataset data = load_dataset(ctx);
  const TrainResult result = train_hybrid(data, ctx.config.anfis.train);
  write_file(ctx.out_dir / artifact::kModel, anfis_model_to_json(result.model));
  std::ostringstream csv;
  write_history_csv(csv, result.history);
  write_file(ctx.out_dir / artifact::kHistory, csv.str());

  auto& log = log_of(ctx);
  const auto& last = result.history.back();
  log << "epochs: " << result.history.size() << "  train RMSE: " << std::setprecision(4)
      << last.train_rmse << "  test RMSE: " << last.test_rmse
      << "  relative error: " << result.relative_error_percent() << " %\n";
  if (result.rank_deficient) log << "warning: least-squares system was rank deficient (minimum-norm solution)\n";
  if (result.step_flagged) log << "warning: a premise step could not reduce the error after halving\n";
  write_manifest(ctx, "train");
  return result.step_flagged ? kExitNumerical : kExitOk;
}

int cmd_simulate(const CommandContext& ctx, std::string_view controller_name,
                 std::string_view scenario_name) {
  const Scenario scenario = make_scenario(scenario_name, ctx.config);
  std::shared_ptr<const LqrDesign> lqr;
  std::shared_ptr<const AnfisModel> model;
  if (controller_name == "lqr") lqr = obtain_lqr(ctx);
  if (controller_name == "tsla") model = obtain_model(ctx);
  auto controller = make_controller(controller_name, ctx.config, lqr, model);

  const TimeSeries series =
      run_closed_loop(ctx.config.sim, *controller, scenario.make_disturbance(), ctx.config.plant);
  std::ostringstream csv;
  series.write_csv(csv);
  const std::string file =
      "timeseries_" + std::string(controller_name) + "_" + std::string(scenario_name) + ".csv";
  write_file(ctx.out_dir / file, csv.str());

  auto& log = log_of(ctx);
  log << "wrote " << series.rows.size() << " rows to " << (ctx.out_dir / file).string() << '\n';
  if (series.diverged) {
    log << "diverged at t = " << series.rows.back().t << " s\n";
  } else if (series.rows.back().t >= scenario.onset() + 10.0 - 1e-9) {
    const TransientMetrics m = compute_metrics(series, scenario.onset(), ctx.config.metrics.bands());
    auto show = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string("unbounded");
    };
    log << "settling_s=" << show(m.settling_time) << " rise_s=" << show(m.rise_time)
        << " peak_theta_rad=" << show(m.peak_theta_dev) << " peak_xdot=" << show(m.peak_xdot)
        << " sse_x=" << show(m.sse_x) << '\n';
  }
  write_manifest(ctx, "simulate", {{"controller", controller_name}, {"scenario", scenario_name}});
  return series.diverged ? kExitDivergence : kExitOk;
}

int cmd_benchmark(const CommandContext& ctx) {
  const auto model = obtain_model(ctx);
  const auto entries = benchmark_entries(ctx.config, model);
  const auto scenarios = benchmark_scenarios(ctx.config);
  const BenchmarkTable table = run_benchmark(ctx.config.plant, ctx.config.sim, entries, scenarios,
                                             benchmark_threads(), ctx.config.metrics.bands());
  std::ostringstream csv;
  table.write_csv(csv);
  write_file(ctx.out_dir / artifact::kBenchmarkCsv, csv.str());
  const std::string text = table.render_text();
  write_file(ctx.out_dir / artifact::kBenchmarkText, text);
  log_of(ctx) << text;
  write_manifest(ctx, "benchmark");
  return table.any_lost() ? kExitDivergence : kExitOk;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace pendulum_lab
