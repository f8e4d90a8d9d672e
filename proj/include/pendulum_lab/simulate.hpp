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

#include <functional>
#include <iosfwd>
#include <vector>

#include "pendulum_lab/controller.hpp"
#include "pendulum_lab/plant.hpp"

namespace pendulum_lab {

struct SimConfig {
  double dt = 1e-3;             // s, fixed step
  double horizon = 40.0;        // s
  PlantState initial_state{};   // upright at rest
  double actuator_gain = 1.0;   // N / V
  int log_decimation = 1;

  void validate() const;
};

/// Logged closed-loop trajectory. `diverged` marks a run cut short by blow-up.
struct TimeSeries {
  struct Row {
    double t, x, x_dot, theta, theta_dot, u, d;
  };
  std::vector<Row> rows;
  bool diverged = false;

  void write_csv(std::ostream& os) const;
};

/// Disturbance force (N) as a function of time.
using Disturbance = std::function<double(double)>;

inline constexpr double kDivergenceThreshold = 1e6;

/// True when any component is non-finite or exceeds kDivergenceThreshold in magnitude.
bool is_diverged(const PlantState& state);

/**
 * One classical Runge-Kutta step with total force u + d held over the step. The result
 * may be non-finite; callers check is_diverged().
 */
PlantState rk4_step(const PlantState& state, double u, double d, double dt,
                    const PhysicalParams& params);

/**
 * Runs the loop: measure, command, actuate, add disturbance, integrate. Row k of the
 * undecimated log holds the state at t_k = t_0 + k dt together with the command and
 * disturbance applied over [t_k, t_k + dt). The run stops early and sets `diverged` when
 * the state blows up; the offending state is logged as the final row.
 */
TimeSeries run_closed_loop(const SimConfig& config, Controller& controller,
                           const Disturbance& disturbance, const PhysicalParams& params);

}  // namespace pendulum_lab
