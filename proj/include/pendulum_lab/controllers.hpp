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

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "pendulum_lab/anfis.hpp"
#include "pendulum_lab/controller.hpp"
#include "pendulum_lab/plant.hpp"

namespace pendulum_lab {

/**
 * Infinite-horizon LQR design for the linearized plant. The applied law is
 * u = -K (state - upright equilibrium).
 */
struct LqrDesign {
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  double R = 1.0;
  Eigen::Matrix4d S = Eigen::Matrix4d::Zero();
  Eigen::RowVector4d K = Eigen::RowVector4d::Zero();
  double residual = 0.0;
  int iterations = 0;

  Eigen::Vector4cd closed_loop_eigenvalues(const LinearStateSpace& ss) const;
};

/**
 * Solves the CARE for the plant and checks the design invariants (residual bound,
 * closed-loop Hurwitz, S PSD). Throws InvalidArgument for R <= 0 or indefinite Q and
 * NumericalError when the solver or the invariants fail.
 */
LqrDesign design_lqr(const LinearStateSpace& ss, const Eigen::Matrix4d& Q, double R);

double lqr_step(const LqrDesign& design, const PlantState& state);

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double filter_n = 100.0;  // derivative filter coefficient N

  void validate() const;
};

/// Integrator and filter memory of one PID instance.
struct PidMemory {
  double integral = 0.0;
  double prev_error = 0.0;
  double derivative = 0.0;
};

/**
 * u = kp e + ki * integral(e) + D, with a trapezoidal integral and the filtered derivative
 * kd N s / (s + N) discretized by backward Euler:
 *   D_k = (D_{k-1} + kd N (e_k - e_{k-1})) / (1 + N dt).
 */
double pid_step(const PidGains& gains, double error, double dt, PidMemory& memory);

class LqrController final : public Controller {
 public:
  explicit LqrController(std::shared_ptr<const LqrDesign> design) : design_(std::move(design)) {}

  double step(const PlantState& measured, const StateVector& reference, double dt) override;
  void reset() override {}
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "lqr"; }

 private:
  std::shared_ptr<const LqrDesign> design_;
};

/// PI/PID on the pendulum angle only; the cart position never enters the command.
class PidController final : public Controller {
 public:
  PidController(PidGains gains, std::string name);

  double step(const PlantState& measured, const StateVector& reference, double dt) override;
  void reset() override { memory_ = {}; }
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return name_; }

 private:
  PidGains gains_;
  std::string name_;
  PidMemory memory_;
};

/// Evaluates a trained fuzzy model on the deviation state (x, x_dot, theta - pi, theta_dot).
double anfis_step(const AnfisModel& model, const PlantState& state);

class AnfisController final : public Controller {
 public:
  explicit AnfisController(std::shared_ptr<const AnfisModel> model) : model_(std::move(model)) {}

  double step(const PlantState& measured, const StateVector& reference, double dt) override;
  void reset() override {}
  std::unique_ptr<Controller> clone() const override;
  std::string name() const override { return "tsla"; }

 private:
  std::shared_ptr<const AnfisModel> model_;
};

// JSON: matrices as nested row-major arrays.
std::string lqr_design_to_json(const LqrDesign& design);
LqrDesign lqr_design_from_json(std::string_view text);
std::string pid_gains_to_json(const PidGains& gains);
PidGains pid_gains_from_json(std::string_view text);

}  // namespace pendulum_lab
