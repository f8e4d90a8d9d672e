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

#include "pendulum_lab/config.hpp"

#include <cmath>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "pendulum_lab/errors.hpp"

namespace pendulum_lab {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_keys(const json& section, const std::string& name,
                std::initializer_list<const char*> allowed) {
  if (!section.is_object()) throw InvalidArgument("config: section '" + name + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  ok.insert("_comment");
  for (const auto& [key, value] : section.items()) {
    if (!ok.count(key)) throw InvalidArgument("config: unknown key '" + name + "." + key + "'");
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& name) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config: bad value for '" + name + "." + key + "'");
  }
}

json gains_json(const PidGains& g) {
  return {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"filter_n", g.filter_n}};
}

void read_gains(const json& s, const std::string& name, PidGains& g) {
  check_keys(s, name, {"kp", "ki", "kd", "filter_n"});
  read(s, "kp", g.kp, name);
  read(s, "ki", g.ki, name);
  read(s, "kd", g.kd, name);
  read(s, "filter_n", g.filter_n, name);
}

}  // namespace

MetricBands MetricSettings::bands() const {
  MetricBands b;
  b.settle_band = settle_band_deg * kDeg;
  b.fall_angle = fall_angle_deg * kDeg;
  b.final_window_fraction = final_window_fraction;
  b.slope_threshold = slope_threshold;
  return b;
}

Eigen::Matrix4d LqrWeights::Q() const {
  return Eigen::Vector4d(q_diag[0], q_diag[1], q_diag[2], q_diag[3]).asDiagonal();
}

void RunConfig::validate() const {
  plant.validate();
  sim.validate();
  for (double q : lqr.q_diag) {
    if (!std::isfinite(q) || q < 0.0) throw InvalidArgument("config: lqr.q_diag entries must be >= 0");
  }
  if (!(lqr.r > 0.0) || !std::isfinite(lqr.r)) throw InvalidArgument("config: lqr.r must be > 0");
  pi.validate();
  pid.validate();
  if (anfis.train.epochs < 1) throw InvalidArgument("config: anfis.epochs must be >= 1");
  if (!(anfis.train.learning_rate > 0.0)) throw InvalidArgument("config: anfis.learning_rate must be > 0");
  if (anfis.train.mfs_per_input < 1) throw InvalidArgument("config: anfis.mfs_per_input must be >= 1");
  if (anfis.train_count < 1 || anfis.test_count < 0) {
    throw InvalidArgument("config: anfis split sizes must be positive");
  }
  if (!(data.horizon > 0.0) || !(data.width > 0.0) || data.log_decimation < 1) {
    throw InvalidArgument("config: data.horizon, data.width, data.log_decimation must be positive");
  }
  if (data.impulse_magnitudes.empty() && data.initial_deviations.empty()) {
    throw InvalidArgument("config: data section defines no runs");
  }
  if (impulse.magnitudes.empty()) throw InvalidArgument("config: impulse.magnitudes is empty");
  for (double m : impulse.magnitudes) ImpulseSpec{impulse.onset, m, impulse.width}.validate();
  noise.validate();
  if (!(metrics.settle_band_deg > 0.0) || !(metrics.fall_angle_deg > 0.0) || !(metrics.final_window_fraction > 0.0) ||
      metrics.final_window_fraction > 1.0 || !(metrics.slope_threshold >= 0.0)) {
    throw InvalidArgument("config: invalid metrics section");
  }
  for (double k : locus_gains) {
    if (!std::isfinite(k) || k < 0.0) throw InvalidArgument("config: locus gains must be >= 0");
  }
}

RunConfig RunConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config: malformed JSON at byte " + std::to_string(e.byte));
  }
  if (doc.is_object() && doc.contains("manifest") && doc.contains("config")) doc = doc.at("config");
  check_keys(doc, "<root>",
             {"plant", "sim", "lqr", "pi", "pid", "anfis", "data", "impulse", "noise", "metrics",
              "analysis"});

  RunConfig c;
  if (doc.contains("plant")) {
    const auto& s = doc.at("plant");
    check_keys(s, "plant", {"cart_mass", "pend_mass", "friction", "inertia", "half_length", "gravity"});
    read(s, "cart_mass", c.plant.cart_mass, "plant");
    read(s, "pend_mass", c.plant.pend_mass, "plant");
    read(s, "friction", c.plant.friction, "plant");
    read(s, "inertia", c.plant.inertia, "plant");
    read(s, "half_length", c.plant.half_length, "plant");
    read(s, "gravity", c.plant.gravity, "plant");
  }
  if (doc.contains("sim")) {
    const auto& s = doc.at("sim");
    check_keys(s, "sim", {"dt", "horizon", "actuator_gain", "log_decimation", "initial_deviation"});
    read(s, "dt", c.sim.dt, "sim");
    read(s, "horizon", c.sim.horizon, "sim");
    read(s, "actuator_gain", c.sim.actuator_gain, "sim");
    read(s, "log_decimation", c.sim.log_decimation, "sim");
    read(s, "initial_deviation", c.initial_deviation, "sim");
  }
  if (doc.contains("lqr")) {
    const auto& s = doc.at("lqr");
    check_keys(s, "lqr", {"q_diag", "r"});
    read(s, "q_diag", c.lqr.q_diag, "lqr");
    read(s, "r", c.lqr.r, "lqr");
  }
  if (doc.contains("pi")) read_gains(doc.at("pi"), "pi", c.pi);
  if (doc.contains("pid")) read_gains(doc.at("pid"), "pid", c.pid);
  if (doc.contains("anfis")) {
    const auto& s = doc.at("anfis");
    check_keys(s, "anfis",
               {"epochs", "learning_rate", "mfs_per_input", "max_halvings", "train_count",
                "test_count", "seed"});
    read(s, "epochs", c.anfis.train.epochs, "anfis");
    read(s, "learning_rate", c.anfis.train.learning_rate, "anfis");
    read(s, "mfs_per_input", c.anfis.train.mfs_per_input, "anfis");
    read(s, "max_halvings", c.anfis.train.max_halvings, "anfis");
    read(s, "train_count", c.anfis.train_count, "anfis");
    read(s, "test_count", c.anfis.test_count, "anfis");
    read(s, "seed", c.anfis.seed, "anfis");
  }
  if (doc.contains("data")) {
    const auto& s = doc.at("data");
    check_keys(s, "data",
               {"horizon", "onset", "width", "impulse_magnitudes", "initial_deviations",
                "log_decimation"});
    read(s, "horizon", c.data.horizon, "data");
    read(s, "onset", c.data.onset, "data");
    read(s, "width", c.data.width, "data");
    read(s, "impulse_magnitudes", c.data.impulse_magnitudes, "data");
    read(s, "initial_deviations", c.data.initial_deviations, "data");
    read(s, "log_decimation", c.data.log_decimation, "data");
  }
  if (doc.contains("impulse")) {
    const auto& s = doc.at("impulse");
    check_keys(s, "impulse", {"onset", "width", "magnitudes"});
    read(s, "onset", c.impulse.onset, "impulse");
    read(s, "width", c.impulse.width, "impulse");
    read(s, "magnitudes", c.impulse.magnitudes, "impulse");
  }
  if (doc.contains("noise")) {
    const auto& s = doc.at("noise");
    check_keys(s, "noise", {"power", "sample_time", "seed"});
    read(s, "power", c.noise.power, "noise");
    read(s, "sample_time", c.noise.sample_time, "noise");
    read(s, "seed", c.noise.seed, "noise");
  }
  if (doc.contains("metrics")) {
    const auto& s = doc.at("metrics");
    check_keys(s, "metrics", {"settle_band_deg", "final_window_fraction", "slope_threshold", "fall_angle_deg"});
    read(s, "settle_band_deg", c.metrics.settle_band_deg, "metrics");
    read(s, "fall_angle_deg", c.metrics.fall_angle_deg, "metrics");
    read(s, "final_window_fraction", c.metrics.final_window_fraction, "metrics");
    read(s, "slope_threshold", c.metrics.slope_threshold, "metrics");
  }
  if (doc.contains("analysis")) {
    const auto& s = doc.at("analysis");
    check_keys(s, "analysis", {"locus_gains"});
    read(s, "locus_gains", c.locus_gains, "analysis");
  }
  const auto& d = c.initial_deviation;
  c.sim.initial_state = {d[0], d[1], std::numbers::pi + d[2], d[3], 0.0};
  c.validate();
  return c;
}

std::string RunConfig::to_json() const {
  json doc = {
      {"plant",
       {{"cart_mass", plant.cart_mass},
        {"pend_mass", plant.pend_mass},
        {"friction", plant.friction},
        {"inertia", plant.inertia},
        {"half_length", plant.half_length},
        {"gravity", plant.gravity}}},
      {"sim",
       {{"dt", sim.dt},
        {"horizon", sim.horizon},
        {"actuator_gain", sim.actuator_gain},
        {"log_decimation", sim.log_decimation},
        {"initial_deviation", initial_deviation}}},
      {"lqr", {{"q_diag", lqr.q_diag}, {"r", lqr.r}}},
      {"pi", gains_json(pi)},
      {"pid", gains_json(pid)},
      {"anfis",
       {{"epochs", anfis.train.epochs},
        {"learning_rate", anfis.train.learning_rate},
        {"mfs_per_input", anfis.train.mfs_per_input},
        {"max_halvings", anfis.train.max_halvings},
        {"train_count", anfis.train_count},
        {"test_count", anfis.test_count},
        {"seed", anfis.seed}}},
      {"data",
       {{"horizon", data.horizon},
        {"onset", data.onset},
        {"width", data.width},
        {"impulse_magnitudes", data.impulse_magnitudes},
        {"initial_deviations", data.initial_deviations},
        {"log_decimation", data.log_decimation}}},
      {"impulse", {{"onset", impulse.onset}, {"width", impulse.width}, {"magnitudes", impulse.magnitudes}}},
      {"noise", {{"power", noise.power}, {"sample_time", noise.sample_time}, {"seed", noise.seed}}},
      {"metrics",
       {{"settle_band_deg", metrics.settle_band_deg},
        {"fall_angle_deg", metrics.fall_angle_deg},
        {"final_window_fraction", metrics.final_window_fraction},
        {"slope_threshold", metrics.slope_threshold}}},
      {"analysis", {{"locus_gains", locus_gains}}}};
  return doc.dump(2) + "\n";
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::set_seed(std::uint64_t seed) {
  anfis.seed = seed;
  noise.seed = seed;
}

}  // namespace pendulum_lab
