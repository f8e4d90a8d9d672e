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

#include "pendulum_lab/plant.hpp"

namespace pendulum_lab {

/**
 * A feedback law sampled once per simulation step. step() returns a voltage command;
 * the simulator converts it to force through the actuator gain.
 *
 * reset() must restore the construction-time internal state so that a reset controller
 * replays its first run exactly. One instance serves one run at a time.
 */
class Controller {
 public:
  virtual ~Controller() = default;

  virtual double step(const PlantState& measured, const StateVector& reference, double dt) = 0;
  virtual void reset() = 0;
  virtual std::unique_ptr<Controller> clone() const = 0;
  virtual std::string name() const = 0;
};

/// Always commands zero. Used for open-loop runs.
class NullController final : public Controller {
 public:
  double step(const PlantState&, const StateVector&, double) override { return 0.0; }
  void reset() override {}
  std::unique_ptr<Controller> clone() const override { return std::make_unique<NullController>(); }
  std::string name() const override { return "none"; }
};

}  // namespace pendulum_lab
