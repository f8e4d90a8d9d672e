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

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/plant.hpp"
#include "pendulum_lab/simulate.hpp"

namespace pendulum_lab {
namespace {

PlantState integrate(PlantState s, double horizon, double dt, const PhysicalParams& p) {
  const long n = std::lround(horizon / dt);
  for (long k = 0; k < n; ++k) s = rk4_step(s, 0.0, 0.0, dt, p);
  return s;
}

// exp(M) by scaling and squaring over a truncated Taylor series.
Eigen::Matrix4d expm(const Eigen::Matrix4d& M) {
  int squarings = 0;
  double norm = M.lpNorm<Eigen::Infinity>();
  while (norm > 0.1) {
    norm /= 2.0;
    ++squarings;
  }
  const Eigen::Matrix4d X = M / std::pow(2.0, squarings);
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity(), sum = term;
  for (int k = 1; k < 20; ++k) {
    term = term * X / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

class ConstantCommand final : public Controller {
 public:
  explicit ConstantCommand(double v) : v_(v) {}
  double step(const PlantState&, const StateVector&, double) override { return v_; }
  void reset() override {}
  std::unique_ptr<Controller> clone() const override { return std::make_unique<ConstantCommand>(v_); }
  std::string name() const override { return "const"; }

 private:
  double v_;
};

TEST(SimConfig, Validation) {
  EXPECT_NO_THROW(SimConfig{}.validate());
  SimConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.dt = 0.02;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.horizon = 1e-4;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.actuator_gain = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.log_decimation = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Rk4, EquilibriumIsFixedPoint) {
  const PlantState s0{};
  const PlantState s1 = rk4_step(s0, 0.0, 0.0, 1e-3, {});
  EXPECT_EQ(s1.vector(), s0.vector());
  EXPECT_DOUBLE_EQ(s1.t, 1e-3);
}

TEST(Rk4, ObservedOrderFromRichardsonTriple) {
  // Half a second keeps dt = 1e-2 inside the asymptotic range for this trajectory.
  const PhysicalParams p;
  PlantState s0;
  s0.theta = std::numbers::pi + 0.4;
  s0.x_dot = 0.3;
  const StateVector y1 = integrate(s0, 0.5, 1e-2, p).vector();
  const StateVector y2 = integrate(s0, 0.5, 5e-3, p).vector();
  const StateVector y3 = integrate(s0, 0.5, 2.5e-3, p).vector();
  const double order = std::log2((y1 - y2).norm() / (y2 - y3).norm());
  EXPECT_NEAR(order, 4.0, 0.1);
}

TEST(Rk4, OneSecondEndpointConvergesAtFourthOrder) {
  const PhysicalParams p;
  PlantState s0;
  s0.theta = std::numbers::pi + 0.1;
  s0.x_dot = 0.3;
  const StateVector ref = integrate(s0, 1.0, 1e-4, p).vector();
  const double e1 = (integrate(s0, 1.0, 1e-2, p).vector() - ref).norm();
  const double e3 = (integrate(s0, 1.0, 2.5e-3, p).vector() - ref).norm();
  EXPECT_GE(std::log(e1 / e3) / std::log(4.0), 3.5);
}

TEST(Rk4, LinearRegimeMatchesMatrixExponential) {
  const PhysicalParams p;
  const LinearStateSpace ss = linearize(p);
  const StateVector d0{0.0, 0.0, 3e-5, 0.0};
  PlantState s = PlantState::from_vector(upright_equilibrium() + d0);
  for (int k = 1; k <= 1000; ++k) {
    s = rk4_step(s, 0.0, 0.0, 1e-3, p);
    if (k % 100 == 0) {
      const StateVector want = expm(ss.A * (k * 1e-3)) * d0;
      ASSERT_LE(std::abs(s.theta - std::numbers::pi), 0.01);
      EXPECT_LT((s.deviation() - want).cwiseAbs().maxCoeff(), 1e-4);
    }
  }
}

TEST(Rk4, EnergyDriftWithoutFriction) {
  PhysicalParams p;
  p.friction = 0.0;
  PlantState s;
  s.theta = std::numbers::pi - 0.5;
  const double e0 = total_energy(s, p);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = rk4_step(s, 0.0, 0.0, 1e-3, p);
    worst = std::max(worst, std::abs(total_energy(s, p) - e0));
  }
  EXPECT_LE(worst / std::abs(e0), 1e-5);
}

TEST(RunClosedLoop, EquilibriumStaysConstant) {
  SimConfig c;
  c.horizon = 2.0;
  NullController none;
  const TimeSeries ts = run_closed_loop(c, none, nullptr, {});
  ASSERT_EQ(ts.rows.size(), 2000u);
  EXPECT_FALSE(ts.diverged);
  for (const auto& r : ts.rows) {
    EXPECT_EQ(r.x, 0.0);
    EXPECT_EQ(r.theta, std::numbers::pi);
  }
  EXPECT_NEAR(ts.rows.back().t, 1.999, 1e-12);
}

TEST(RunClosedLoop, TimeStrictlyIncreasingByLoggedStep) {
  SimConfig c;
  c.horizon = 1.0;
  c.log_decimation = 7;
  NullController none;
  const TimeSeries ts = run_closed_loop(c, none, nullptr, {});
  for (std::size_t i = 1; i < ts.rows.size(); ++i) {
    EXPECT_NEAR(ts.rows[i].t - ts.rows[i - 1].t, 7e-3, 1e-12);
  }
}

TEST(RunClosedLoop, DecimatedLogIsSubsequence) {
  SimConfig c;
  c.horizon = 3.0;
  c.initial_state.theta = std::numbers::pi + 0.05;
  NullController none;
  auto dist = [](double t) { return std::sin(3.0 * t); };
  const TimeSeries full = run_closed_loop(c, none, dist, {});
  c.log_decimation = 10;
  const TimeSeries dec = run_closed_loop(c, none, dist, {});
  ASSERT_EQ(dec.rows.size(), 300u);
  for (std::size_t i = 0; i < dec.rows.size(); ++i) {
    const auto& a = dec.rows[i];
    const auto& b = full.rows[10 * i];
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.theta_dot, b.theta_dot);
    EXPECT_EQ(a.d, b.d);
  }
}

TEST(RunClosedLoop, DeterministicAcrossRuns) {
  SimConfig c;
  c.horizon = 2.0;
  c.initial_state.theta = std::numbers::pi + 0.1;
  ConstantCommand k(0.5);
  std::ostringstream a, b;
  run_closed_loop(c, k, nullptr, {}).write_csv(a);
  run_closed_loop(c, k, nullptr, {}).write_csv(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunClosedLoop, ActuatorGainScalesCommand) {
  SimConfig c;
  c.horizon = 0.01;
  c.actuator_gain = 2.0;
  ConstantCommand k(1.0);
  const TimeSeries g2 = run_closed_loop(c, k, nullptr, {});
  c.actuator_gain = 1.0;
  ConstantCommand k2(2.0);
  const TimeSeries g1 = run_closed_loop(c, k2, nullptr, {});
  EXPECT_EQ(g2.rows.back().x, g1.rows.back().x);
  EXPECT_EQ(g2.rows.back().u, 1.0);
}

TEST(RunClosedLoop, DivergenceStopsEarlyWithPartialLog) {
  SimConfig c;
  c.horizon = 40.0;
  ConstantCommand k(1e6);
  const TimeSeries ts = run_closed_loop(c, k, nullptr, {});
  EXPECT_TRUE(ts.diverged);
  EXPECT_LT(ts.rows.size(), 40000u);
  const auto& last = ts.rows.back();
  EXPECT_GT(std::max(std::abs(last.x), std::abs(last.x_dot)), kDivergenceThreshold);
}

TEST(RunClosedLoop, OpenLoopTiltGrowsMonotonically) {
  SimConfig c;
  c.horizon = 5.0;
  c.initial_state.theta = std::numbers::pi + 1e-3;
  NullController none;
  const TimeSeries ts = run_closed_loop(c, none, nullptr, {});
  double prev = 0.0;
  bool passed = false;
  for (const auto& r : ts.rows) {
    const double phi = std::abs(r.theta - std::numbers::pi);
    if (phi > 0.5) {
      passed = true;
      break;
    }
    ASSERT_GE(phi, prev);
    prev = phi;
  }
  EXPECT_TRUE(passed);
}

TEST(TimeSeries, CsvHeader) {
  TimeSeries ts;
  ts.rows.push_back({0.0, 1.0, 0.0, 3.0, 0.0, 0.25, 0.0});
  std::ostringstream os;
  ts.write_csv(os);
  EXPECT_EQ(os.str(), "t,x,x_dot,theta,theta_dot,u,d\n0,1,0,3,0,0.25,0\n");
}

}  // namespace
}  // namespace pendulum_lab
