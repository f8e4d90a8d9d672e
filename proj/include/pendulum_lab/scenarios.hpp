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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pendulum_lab/controller.hpp"
#include "pendulum_lab/simulate.hpp"

namespace pendulum_lab {

/// Rectangular force pulse: magnitude on [onset, onset + width), zero elsewhere.
struct ImpulseSpec {
  double onset = 20.0;
  double magnitude = 10.0;
  double width = 0.1;

  void validate() const;
};

double impulse_signal(const ImpulseSpec& spec, double t);

/// Zero-mean Gaussian force held constant over each sample_time interval.
struct NoiseSpec {
  double power = 0.5;  // variance of the held samples, N^2
  double sample_time = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * Band-limited white noise. Sample k covers [k T, (k + 1) T) and is the k-th draw of a
 * seeded mt19937_64 stream through Box-Muller, so the signal is a fixed function of
 * (spec, t). Samples are generated lazily; an instance must not be shared across threads.
 */
class NoiseSignal {
 public:
  explicit NoiseSignal(const NoiseSpec& spec);

  double operator()(double t) const;

 private:
  NoiseSpec spec_;
  double scale_;
  mutable std::mt19937_64 rng_;
  mutable std::vector<double> samples_;
};

/// One-shot evaluation; regenerates the stream up to t.
double noise_signal(const NoiseSpec& spec, double t);

struct MetricBands {
  double settle_band = 0.5 * std::numbers::pi / 180.0;  // rad, on |theta - pi|
  double final_window_fraction = 0.1;
  double slope_threshold = 1e-4;  // units / s, on |x| and |theta - pi|
  double fall_angle = 0.5 * std::numbers::pi;  // |theta - pi| beyond which balance is lost
};

enum class RunOutcome { kBalanced, kFell, kDiverged };

/**
 * Disturbance-recovery metrics. An empty optional means unbounded: the quantity did not
 * settle within the log, or the run fell or diverged (every metric is then unbounded).
 *
 * settling_time: from onset to the first sample after the last one outside the settle
 *   band; 0 when the band is never left.
 * rise_time: time for |theta - pi| to decay from 90 % to 10 % of its post-onset peak.
 *   settling_time >= rise_time holds whenever 10 % of the peak lies outside the band.
 * sse_*: mean absolute value over the final window; unbounded when the least-squares
 *   slope of the absolute value over that window exceeds slope_threshold.
 */
struct TransientMetrics {
  std::optional<double> settling_time;
  std::optional<double> rise_time;
  std::optional<double> peak_theta_dev;
  std::optional<double> peak_xdot;
  std::optional<double> sse_theta;
  std::optional<double> sse_x;
  RunOutcome outcome = RunOutcome::kBalanced;
};

/// Requires the log to cover onset + 10 s unless it diverged.
TransientMetrics compute_metrics(const TimeSeries& series, double onset,
                                 const MetricBands& bands = {});

/// a <= b where an empty optional is +infinity.
bool ordered_le(const std::optional<double>& a, const std::optional<double>& b);

struct Scenario {
  enum class Kind { kImpulse, kNoise };
  Kind kind = Kind::kImpulse;
  ImpulseSpec impulse;
  NoiseSpec noise;

  std::string label() const { return kind == Kind::kImpulse ? "impulse" : "noise"; }
  /// Impulse magnitude (N) or noise power (N^2).
  double magnitude() const { return kind == Kind::kImpulse ? impulse.magnitude : noise.power; }
  double onset() const { return kind == Kind::kImpulse ? impulse.onset : 0.0; }
  Disturbance make_disturbance() const;
};

struct BenchmarkEntry {
  std::string name;
  std::shared_ptr<const Controller> prototype;
};

struct BenchmarkCell {
  std::string controller;
  std::string scenario;
  std::string magnitude;  // numeric text, or "mean" for the impulse average
  TransientMetrics metrics;
};

struct BenchmarkTable {
  std::vector<BenchmarkCell> cells;  // controller-major, scenarios in input order
  std::vector<BenchmarkCell> means;  // per-controller mean over impulse repeats

  bool any_lost() const;
  /// controller,scenario,magnitude,settling_s,rise_ms,peak_theta_deg,peak_xdot,sse_theta,sse_x
  void write_csv(std::ostream& os) const;
  /// Parameter-by-controller layout: impulse means first, then the noise cells.
  std::string render_text() const;
};

/**
 * Runs every controller against every scenario, each cell on a fresh clone of the
 * prototype. Cells run on up to `threads` workers; results do not depend on the count.
 */
BenchmarkTable run_benchmark(const PhysicalParams& params, const SimConfig& sim,
                             std::span<const BenchmarkEntry> controllers,
                             std::span<const Scenario> scenarios, unsigned threads,
                             const MetricBands& bands = {});

}  // namespace pendulum_lab
