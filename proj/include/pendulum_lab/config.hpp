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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pendulum_lab/anfis.hpp"
#include "pendulum_lab/controllers.hpp"
#include "pendulum_lab/plant.hpp"
#include "pendulum_lab/scenarios.hpp"
#include "pendulum_lab/simulate.hpp"

namespace pendulum_lab {

struct LqrWeights {
  std::array<double, 4> q_diag = {1200.0, 0.0, 100.0, 0.0};
  double r = 1.0;

  Eigen::Matrix4d Q() const;
};

struct AnfisSettings {
  TrainConfig train;
  Eigen::Index train_count = 500;
  Eigen::Index test_count = 91;
  std::uint64_t seed = 2024;
};

/// Stage-1 LQR runs whose logs feed the fuzzy model.
struct DataCollection {
  double horizon = 6.0;
  double onset = 1.0;
  double width = 0.1;
  std::vector<double> impulse_magnitudes = {-30.0, -15.0, 15.0, 30.0};
  std::vector<std::array<double, 4>> initial_deviations = {
      {0.5, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.2, 0.0}, {-0.3, 0.5, -0.15, 0.5}};
  int log_decimation = 10;
};

struct MetricSettings {
  double settle_band_deg = 0.5;
  double fall_angle_deg = 90.0;
  double final_window_fraction = 0.1;
  double slope_threshold = 1e-4;

  MetricBands bands() const;
};

struct ImpulseScenarioSettings {
  double onset = 20.0;
  double width = 0.1;
  std::vector<double> magnitudes = {10.0, 20.0, 30.0};
};

/**
 * Everything a run depends on. Parsed from a JSON document with one object per section;
 * unknown keys are rejected, missing keys keep the defaults below. Keys named "_comment"
 * are accepted and ignored. A manifest written by the CLI (with top-level "manifest" and
 * "config" members) is accepted as well.
 */
struct RunConfig {
  PhysicalParams plant;
  SimConfig sim;  // initial_state follows initial_deviation
  std::array<double, 4> initial_deviation = {0.0, 0.0, 0.0, 0.0};
  LqrWeights lqr;
  PidGains pi{27.234, 85.597, 0.0, 100.0};
  PidGains pid{36.887, 165.496, 1.505, 678.646};
  AnfisSettings anfis;
  DataCollection data;
  ImpulseScenarioSettings impulse;
  NoiseSpec noise{0.5, 0.01, 7};
  MetricSettings metrics;
  std::vector<double> locus_gains = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0};

  void validate() const;

  static RunConfig from_json(std::string_view text);
  /// Canonical JSON (sorted keys, round-trip precision).
  std::string to_json() const;
  /// FNV-1a 64 of to_json().
  std::uint64_t hash() const;

  /// Overrides the data-split and noise seeds.
  void set_seed(std::uint64_t seed);
};

}  // namespace pendulum_lab
