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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "pendulum_lab/anfis.hpp"
#include "pendulum_lab/controllers.hpp"
#include "pendulum_lab/io.hpp"
#include "pendulum_lab/pipeline.hpp"
#include "pendulum_lab/plant.hpp"
#include "pendulum_lab/scenarios.hpp"
#include "pendulum_lab/simulate.hpp"

namespace pl = pendulum_lab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Verdict pole_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const pl::DeriveReport r = pl::derive_model({});
  const double dt = seconds_since(t0);
  const double want[] = {5.5651, -0.1428, -5.6041};
  double err = 0.0;
  bool ok = r.pendulum_poles.size() == 3 && r.cart_poles.size() == 4;
  for (int i = 0; ok && i < 3; ++i) {
    err = std::max(err, std::abs(r.pendulum_poles[i] - std::complex<double>(want[i], 0.0)));
  }
  bool cart_zero = false;
  for (const auto& p : r.cart_poles) cart_zero |= std::abs(p) < 1e-12;
  ok = ok && err <= 1e-3 && cart_zero && dt < 1.0;
  return {ok, fmt("max pole error %.2e, %.3f s, cart pole at 0: ", err, dt) + (cart_zero ? "yes" : "no")};
}

Verdict controllability_reproduction() {
  const pl::ControllabilityReport co = pl::controllability(pl::linearize({}));
  const double want[] = {1.8182, 0.3306, 12.2089, 4.4287, 4.5455, 0.8264, 141.8858, 31.3196};
  double worst = 0.0;
  for (double w : want) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < co.matrix.size(); ++i) {
      best = std::min(best, std::abs(std::abs(co.matrix(i)) - w) / w);
    }
    worst = std::max(worst, best);
  }
  return {worst <= 1e-2 && co.rank == 4, fmt("worst relative entry error %.2e, rank %.0f", worst, co.rank)};
}

Verdict linearization_consistency() {
  const pl::PhysicalParams p;
  const pl::LinearStateSpace ss = pl::linearize(p);
  const pl::StateVector eq = pl::upright_equilibrium();
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double analytic, double fd) {
    worst = std::max(worst, std::abs(analytic - fd) / std::max(std::abs(fd), 1.0));
  };
  for (int j = 0; j < 4; ++j) {
    pl::StateVector e = pl::StateVector::Zero();
    e(j) = h;
    const pl::StateVector col = (pl::detail::derivative_unchecked(eq + e, 0.0, p) -
                                 pl::detail::derivative_unchecked(eq - e, 0.0, p)) / (2 * h);
    for (int i = 0; i < 4; ++i) check(ss.A(i, j), col(i));
  }
  const pl::StateVector bcol = (pl::detail::derivative_unchecked(eq, h, p) -
                                pl::detail::derivative_unchecked(eq, -h, p)) / (2 * h);
  for (int i = 0; i < 4; ++i) check(ss.B(i), bcol(i));
  return {worst <= 1e-6, fmt("worst relative deviation %.2e", worst)};
}

Verdict lqr_validity() {
  const pl::LinearStateSpace ss = pl::linearize({});
  const Eigen::Matrix4d Q = Eigen::Vector4d(1200.0, 0.0, 100.0, 0.0).asDiagonal();
  const pl::LqrDesign d = pl::design_lqr(ss, Q, 1.0);
  const double max_re = d.closed_loop_eigenvalues(ss).real().maxCoeff();
  double scale_err = 0.0;
  for (double s : {1e-3, 0.1, 10.0, 1e3}) {
    const pl::LqrDesign ds = pl::design_lqr(ss, s * Q, s);
    scale_err = std::max(scale_err, (ds.K - d.K).cwiseAbs().maxCoeff() / d.K.cwiseAbs().maxCoeff());
  }
  const bool ok = d.residual <= 1e-8 && max_re < 0.0 && scale_err <= 1e-9;
  return {ok, fmt("residual %.2e, max Re(eig) %.4f, scaling drift %.2e", d.residual, max_re, scale_err)};
}

Verdict integrator_quality() {
  pl::PhysicalParams p;
  p.friction = 0.0;
  pl::PlantState s;
  s.theta = std::numbers::pi - 0.5;
  s.x_dot = 0.2;
  const double e0 = pl::total_energy(s, p);
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = pl::rk4_step(s, 0.0, 0.0, 1e-3, p);
    drift = std::max(drift, std::abs(pl::total_energy(s, p) - e0));
  }
  drift /= std::abs(e0);

  // Log-log fit of the 1 s endpoint error against a fine-step reference.
  const pl::PhysicalParams q;
  pl::PlantState s0;
  s0.theta = std::numbers::pi + 0.1;
  s0.x_dot = 0.3;
  auto endpoint = [&](double dt) {
    pl::PlantState y = s0;
    for (long k = 0, n = std::lround(1.0 / dt); k < n; ++k) y = pl::rk4_step(y, 0.0, 0.0, dt, q);
    return y.vector();
  };
  const pl::StateVector ref = endpoint(1e-4);
  const double dts[] = {1e-2, 5e-3, 2.5e-3};
  double mx = 0.0, my = 0.0, lx[3], ly[3];
  for (int i = 0; i < 3; ++i) {
    lx[i] = std::log(dts[i]);
    ly[i] = std::log((endpoint(dts[i]) - ref).norm());
    mx += lx[i] / 3.0;
    my += ly[i] / 3.0;
  }
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double order = sxy / sxx;
  return {drift <= 1e-5 && order >= 3.5, fmt("relative energy drift %.2e, observed order %.3f", drift, order)};
}

struct Stage2 {
  pl::Dataset data;
  pl::TrainResult result;
  double seconds = 0.0;
};

const Stage2& stage2() {
  static const Stage2 s = [] {
    Stage2 out;
    const auto t0 = std::chrono::steady_clock::now();
    const pl::RunConfig cfg;
    out.data = pl::generate_training_data(cfg, pl::design_lqr(cfg));
    out.result = pl::train_hybrid(out.data, cfg.anfis.train);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

Verdict anfis_exact_fit() {
  const Stage2& s = stage2();
  const auto& first = s.result.history.front();
  const double rel = s.result.relative_error_percent();
  const bool split_ok = s.data.train.size() == 500 && s.data.test.size() == 91;
  const bool ok = split_ok && first.train_rmse <= 1e-6 && first.test_rmse <= 1e-5 && rel <= 0.05 &&
                  s.seconds < 30.0;
  return {ok, fmt("first pass train/test RMSE %.2e / %.2e, final relative error %.2e %%, %.2f s",
                  first.train_rmse, first.test_rmse, rel, s.seconds)};
}

Verdict normalization_and_gradient() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const pl::AnfisModel& trained = stage2().result.model;
  double sum_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Eigen::Vector4d z;
    for (int k = 0; k < 4; ++k) {
      const auto [lo, hi] = trained.input_ranges[k];
      z(k) = 0.5 * (lo + hi) + 1.5 * (hi - lo) * U(rng);
    }
    sum_err = std::max(sum_err, std::abs(pl::normalize(pl::firing_strengths(trained, z)).sum() - 1.0));
  }

  // Random small model and data for the gradient check.
  std::vector<std::pair<double, double>> ranges = {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}};
  pl::AnfisModel m = pl::AnfisModel::grid(ranges, 2);
  for (auto& mfs : m.premises) {
    for (auto& mf : mfs) {
      mf.a *= 1.0 + 0.3 * U(rng);
      mf.b += 0.4 * U(rng);
      mf.c += 0.2 * U(rng);
    }
  }
  pl::Dataset d;
  d.inputs = Eigen::MatrixXd::NullaryExpr(100, 4, [&]() { return U(rng); });
  d.targets.resize(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    d.targets(i) = std::sin(2.0 * d.inputs(i, 0)) + d.inputs(i, 1) * d.inputs(i, 3);
    d.train.push_back(i);
  }
  pl::solve_consequents(m, d, d.train);
  const Eigen::VectorXd p = pl::premise_parameters(m);
  const Eigen::VectorXd g = pl::premise_gradient(m, d, d.train);
  auto mse = [&](const Eigen::VectorXd& q) {
    pl::AnfisModel t = m;
    pl::set_premise_parameters(t, q);
    const double r = pl::rmse(t, d, d.train);
    return r * r;
  };
  double grad_err = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = 1e-6;
    Eigen::VectorXd hi = p, lo = p;
    hi(i) += h;
    lo(i) -= h;
    const double fd = (mse(hi) - mse(lo)) / (2 * h);
    grad_err = std::max(grad_err, std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-6));
  }
  return {sum_err <= 1e-12 && grad_err <= 1e-5,
          fmt("max |sum - 1| %.2e, worst gradient relative error %.2e", sum_err, grad_err)};
}

Verdict benchmark_orderings() {
  const auto t0 = std::chrono::steady_clock::now();
  const pl::RunConfig cfg;
  auto model = std::make_shared<const pl::AnfisModel>(stage2().result.model);
  const auto entries = pl::benchmark_entries(cfg, model);
  const auto scenarios = pl::benchmark_scenarios(cfg);
  const pl::BenchmarkTable t = pl::run_benchmark(cfg.plant, cfg.sim, entries, scenarios,
                                                 pl::benchmark_threads(), cfg.metrics.bands());
  const double secs = seconds_since(t0);

  const std::size_t n = scenarios.size();
  auto cell = [&](std::size_t controller, std::size_t scenario) -> const pl::TransientMetrics& {
    return t.cells[controller * n + scenario].metrics;
  };
  int order_violations = 0, flag_violations = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto &pi = cell(0, s), &pid = cell(1, s), &ts = cell(2, s);
    for (auto f : {&pl::TransientMetrics::settling_time, &pl::TransientMetrics::peak_theta_dev,
                   &pl::TransientMetrics::peak_xdot}) {
      if (!pl::ordered_le(ts.*f, pid.*f) || !pl::ordered_le(pid.*f, pi.*f)) ++order_violations;
    }
    if (scenarios[s].kind == pl::Scenario::Kind::kImpulse) {
      if (pi.sse_x || pid.sse_x) ++flag_violations;
    }
  }

  // TS-LA final cart position, per scenario, from the logged runs themselves.
  double worst_x = 0.0;
  for (const auto& sc : scenarios) {
    pl::AnfisController c(model);
    const pl::TimeSeries ts = pl::run_closed_loop(cfg.sim, c, sc.make_disturbance(), cfg.plant);
    worst_x = ts.diverged ? INFINITY : std::max(worst_x, std::abs(ts.rows.back().x));
  }
  const bool ok = order_violations == 0 && flag_violations == 0 && worst_x <= 0.01 && secs < 60.0;
  return {ok, fmt("ordering violations %.0f, missing PI/PID position flags %.0f, TS-LA max |x_end| %.2e m, %.2f s",
                  order_violations, flag_violations, worst_x, secs)};
}

Verdict open_loop_instability() {
  const pl::RunConfig cfg;
  pl::NullController none;
  const pl::Scenario sc = pl::make_scenario("impulse", cfg);
  const pl::TimeSeries ts = pl::run_closed_loop(cfg.sim, none, sc.make_disturbance(), cfg.plant);
  double peak = 0.0;
  for (const auto& r : ts.rows) {
    peak = std::max({peak, std::abs(r.x), std::abs(r.x_dot), std::abs(r.theta), std::abs(r.theta_dot)});
  }
  const double t_end = ts.rows.back().t;
  return {ts.diverged, fmt("diverged flag %.0f, last t %.3f s, peak |state| %.3g (threshold %.0e)",
                           ts.diverged, t_end, peak, pl::kDivergenceThreshold)};
}

std::vector<std::pair<std::string, std::string>> csv_outputs(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out.emplace_back(e.path().filename().string(), pl::read_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Verdict reproducibility() {
  const fs::path root = fs::temp_directory_path() / "pendulum_lab_acceptance";
  fs::remove_all(root);
  auto full_pipeline = [&](const fs::path& dir) {
    pl::CommandContext ctx;
    ctx.config.set_seed(31337);
    ctx.out_dir = dir;
    pl::cmd_derive(ctx);
    pl::cmd_design_lqr(ctx);
    pl::cmd_gen_data(ctx);
    pl::cmd_train(ctx);
    for (const char* c : {"none", "lqr", "pi", "pid", "tsla"}) {
      for (const char* s : {"impulse", "noise"}) pl::cmd_simulate(ctx, c, s);
    }
    pl::cmd_benchmark(ctx);
    return csv_outputs(dir);
  };
  const auto a = full_pipeline(root / "a");
  const auto b = full_pipeline(root / "b");
  fs::remove_all(root);
  return {!a.empty() && a == b, fmt("%.0f CSV files compared", a.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const Criterion criteria[] = {
      {1, "pole reproduction", pole_reproduction},
      {2, "controllability reproduction", controllability_reproduction},
      {3, "linearization consistency", linearization_consistency},
      {4, "LQR validity", lqr_validity},
      {5, "integrator quality", integrator_quality},
      {6, "ANFIS exact fit", anfis_exact_fit},
      {7, "firing-strength normalization and premise gradients", normalization_and_gradient},
      {8, "benchmark orderings", benchmark_orderings},
      {9, "open-loop instability", open_loop_instability},
      {10, "reproducibility", reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
