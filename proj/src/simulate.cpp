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

#include "pendulum_lab/simulate.hpp"

#include <cmath>
#include <ostream>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"

namespace pendulum_lab {

void SimConfig::validate() const {
  if (!(dt > 0.0 && dt <= 0.01)) throw InvalidArgument("sim.dt must satisfy 0 < dt <= 0.01");
  if (!(horizon >= dt) || !std::isfinite(horizon)) throw InvalidArgument("sim.horizon must be >= dt");
  if (!(actuator_gain > 0.0) || !std::isfinite(actuator_gain)) {
    throw InvalidArgument("sim.actuator_gain must be > 0");
  }
  if (log_decimation < 1) throw InvalidArgument("sim.log_decimation must be a positive integer");
  if (!initial_state.finite()) throw InvalidArgument("sim.initial_state must be finite");
}

void TimeSeries::write_csv(std::ostream& os) const {
  os << "t,x,x_dot,theta,theta_dot,u,d\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << ',' << format_double(r.x) << ',' << format_double(r.x_dot) << ','
       << format_double(r.theta) << ',' << format_double(r.theta_dot) << ',' << format_double(r.u)
       << ',' << format_double(r.d) << '\n';
  }
}

bool is_diverged(const PlantState& state) {
  for (double v : {state.x, state.x_dot, state.theta, state.theta_dot}) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceThreshold) return true;
  }
  return false;
}

PlantState rk4_step(const PlantState& state, double u, double d, double dt,
                    const PhysicalParams& params) {
  const double force = u + d;
  const StateVector s = state.vector();
  const StateVector k1 = detail::derivative_unchecked(s, force, params);
  const StateVector k2 = detail::derivative_unchecked(s + 0.5 * dt * k1, force, params);
  const StateVector k3 = detail::derivative_unchecked(s + 0.5 * dt * k2, force, params);
  const StateVector k4 = detail::derivative_unchecked(s + dt * k3, force, params);
  const StateVector next = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return PlantState::from_vector(next, state.t + dt);
}

TimeSeries run_closed_loop(const SimConfig& config, Controller& controller,
                           const Disturbance& disturbance, const PhysicalParams& params) {
  config.validate();
  params.validate();

  const auto steps = static_cast<long long>(std::llround(config.horizon / config.dt));
  const StateVector reference = upright_equilibrium();
  const double t0 = config.initial_state.t;

  TimeSeries series;
  series.rows.reserve(static_cast<std::size_t>(steps / config.log_decimation + 2));
  PlantState state = config.initial_state;

  for (long long k = 0; k < steps; ++k) {
    state.t = t0 + static_cast<double>(k) * config.dt;
    const double command = controller.step(state, reference, config.dt);
    const double d = disturbance ? disturbance(state.t) : 0.0;
    if (k % config.log_decimation == 0) {
      series.rows.push_back(
          {state.t, state.x, state.x_dot, state.theta, state.theta_dot, command, d});
    }
    state = rk4_step(state, config.actuator_gain * command, d, config.dt, params);
    if (is_diverged(state) || !std::isfinite(command)) {
      series.diverged = true;
      series.rows.push_back(
          {state.t, state.x, state.x_dot, state.theta, state.theta_dot, command, d});
      break;
    }
  }
  return series;
}

}  // namespace pendulum_lab
