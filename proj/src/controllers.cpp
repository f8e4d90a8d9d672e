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

#include "pendulum_lab/controllers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "pendulum_lab/care.hpp"
#include "pendulum_lab/errors.hpp"

namespace pendulum_lab {

using nlohmann::json;

Eigen::Vector4cd LqrDesign::closed_loop_eigenvalues(const LinearStateSpace& ss) const {
  const Eigen::Matrix4d closed = ss.A - ss.B * K;
  return closed.eigenvalues();
}

LqrDesign design_lqr(const LinearStateSpace& ss, const Eigen::Matrix4d& Q, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("lqr: R must be > 0");
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, R);
  const CareSolution sol = solve_care(ss.A, ss.B, Q, r);

  LqrDesign design;
  design.Q = Q;
  design.R = R;
  design.S = sol.S;
  design.K = sol.K;
  design.residual = sol.residual;
  design.iterations = sol.iterations;

  const double bound = 1e-8 * (1.0 + Q.norm());
  if (design.residual > bound) {
    throw NumericalError("lqr: Riccati residual above bound", design.residual);
  }
  const Eigen::Matrix4d closed = ss.A - ss.B * design.K;
  if (design.closed_loop_eigenvalues(ss).real().maxCoeff() >= -1e-9 * std::max(1.0, closed.norm())) {
    throw NumericalError("lqr: closed loop is not Hurwitz", design.residual);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> s_eig(design.S, Eigen::EigenvaluesOnly);
  if (s_eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, design.S.norm())) {
    throw NumericalError("lqr: Riccati solution is not positive semidefinite", design.residual);
  }
  return design;
}

double lqr_step(const LqrDesign& design, const PlantState& state) {
  return -design.K.dot(state.deviation());
}

void PidGains::validate() const {
  for (double g : {kp, ki, kd}) {
    if (!std::isfinite(g) || g < 0.0) throw InvalidArgument("pid gains must be finite and >= 0");
  }
  if (!std::isfinite(filter_n) || filter_n <= 0.0) {
    throw InvalidArgument("pid filter coefficient N must be > 0");
  }
}

double pid_step(const PidGains& gains, double error, double dt, PidMemory& memory) {
  if (!(dt > 0.0)) throw InvalidArgument("pid_step: dt must be > 0");
  memory.integral += 0.5 * dt * (error + memory.prev_error);
  if (gains.kd == 0.0) {
    memory.derivative = 0.0;
  } else {
    const double nd = gains.filter_n * dt;
    memory.derivative =
        (memory.derivative + gains.kd * gains.filter_n * (error - memory.prev_error)) / (1.0 + nd);
  }
  memory.prev_error = error;
  return gains.kp * error + gains.ki * memory.integral + memory.derivative;
}

double LqrController::step(const PlantState& measured, const StateVector& reference, double) {
  return -design_->K.dot(measured.vector() - reference);
}

std::unique_ptr<Controller> LqrController::clone() const {
  return std::make_unique<LqrController>(design_);
}

PidController::PidController(PidGains gains, std::string name)
    : gains_(gains), name_(std::move(name)) {
  gains_.validate();
}

double PidController::step(const PlantState& measured, const StateVector& reference, double dt) {
  return pid_step(gains_, reference(2) - measured.theta, dt, memory_);
}

std::unique_ptr<Controller> PidController::clone() const {
  return std::make_unique<PidController>(gains_, name_);
}

double anfis_step(const AnfisModel& model, const PlantState& state) {
  return anfis_infer(model, state.deviation());
}

double AnfisController::step(const PlantState& measured, const StateVector& reference, double) {
  return anfis_infer(*model_, measured.vector() - reference);
}

std::unique_ptr<Controller> AnfisController::clone() const {
  return std::make_unique<AnfisController>(model_);
}

namespace {

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

template <typename Derived>
void matrix_from_json(const json& j, Eigen::MatrixBase<Derived>& m, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows()) {
    throw InvalidArgument(std::string("'") + name + "' has the wrong number of rows");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw InvalidArgument(std::string("'") + name + "' has the wrong number of columns");
    }
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string(what) + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

}  // namespace

std::string lqr_design_to_json(const LqrDesign& design) {
  json doc = {{"Q", matrix_json(design.Q)},
              {"R", design.R},
              {"S", matrix_json(design.S)},
              {"K", matrix_json(design.K)},
              {"residual", design.residual},
              {"iterations", design.iterations}};
  return doc.dump(2) + "\n";
}

LqrDesign lqr_design_from_json(std::string_view text) {
  const json doc = parse_json(text, "lqr design");
  LqrDesign design;
  try {
    matrix_from_json(doc.at("Q"), design.Q, "Q");
    matrix_from_json(doc.at("S"), design.S, "S");
    matrix_from_json(doc.at("K"), design.K, "K");
    design.R = doc.at("R").get<double>();
    design.residual = doc.at("residual").get<double>();
    design.iterations = doc.at("iterations").get<int>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("lqr design: ") + e.what());
  }
  if (!(design.R > 0.0)) throw InvalidArgument("lqr design: R must be > 0");
  return design;
}

std::string pid_gains_to_json(const PidGains& gains) {
  json doc = {{"kp", gains.kp}, {"ki", gains.ki}, {"kd", gains.kd}, {"filter_n", gains.filter_n}};
  return doc.dump(2) + "\n";
}

PidGains pid_gains_from_json(std::string_view text) {
  const json doc = parse_json(text, "pid gains");
  PidGains gains;
  try {
    gains.kp = doc.at("kp").get<double>();
    gains.ki = doc.at("ki").get<double>();
    gains.kd = doc.value("kd", 0.0);
    gains.filter_n = doc.value("filter_n", 100.0);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("pid gains: ") + e.what());
  }
  gains.validate();
  return gains;
}

}  // namespace pendulum_lab
