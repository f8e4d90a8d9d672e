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

#include "pendulum_lab/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"

namespace pendulum_lab {

void ImpulseSpec::validate() const {
  if (!std::isfinite(onset) || !std::isfinite(magnitude)) throw InvalidArgument("impulse: non-finite spec");
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("impulse: width must be > 0");
}

double impulse_signal(const ImpulseSpec& spec, double t) {
  return (t >= spec.onset && t < spec.onset + spec.width) ? spec.magnitude : 0.0;
}

void NoiseSpec::validate() const {
  if (!std::isfinite(power) || power < 0.0) throw InvalidArgument("noise: power must be >= 0");
  if (!(sample_time > 0.0) || !std::isfinite(sample_time)) {
    throw InvalidArgument("noise: sample_time must be > 0");
  }
}

NoiseSignal::NoiseSignal(const NoiseSpec& spec)
    : spec_(spec), scale_(std::sqrt(spec.power)), rng_(spec.seed) {
  spec_.validate();
}

double NoiseSignal::operator()(double t) const {
  if (scale_ == 0.0 || t < 0.0) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(t / spec_.sample_time));
  constexpr double kTwo53 = 0x1.0p-53;
  while (samples_.size() <= k) {
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * kTwo53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * kTwo53;          // [0, 1)
    samples_.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
  }
  return scale_ * samples_[k];
}

double noise_signal(const NoiseSpec& spec, double t) { return NoiseSignal(spec)(t); }

// ---------------------------------------------------------------------------------------

namespace {

double slope(std::span<const double> t, std::span<const double> y) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 2) return 0.0;
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sty += (t[i] - mt) * (y[i] - my);
    stt += (t[i] - mt) * (t[i] - mt);
  }
  return stt > 0.0 ? sty / stt : 0.0;
}

std::optional<double> steady_state(std::span<const double> t, std::span<const double> abs_value,
                                   double threshold) {
  if (slope(t, abs_value) > threshold) return std::nullopt;
  double sum = 0.0;
  for (double v : abs_value) sum += v;
  return abs_value.empty() ? 0.0 : sum / static_cast<double>(abs_value.size());
}

}  // namespace

TransientMetrics compute_metrics(const TimeSeries& series, double onset, const MetricBands& bands) {
  TransientMetrics m;
  if (series.diverged) {
    m.outcome = RunOutcome::kDiverged;
    return m;
  }
  if (series.rows.empty() || series.rows.front().t > onset ||
      series.rows.back().t < onset + 10.0 - 1e-9) {
    throw InvalidArgument("compute_metrics: series must cover the onset and 10 s beyond it");
  }

  std::vector<double> t, dev, xdot;
  for (const auto& r : series.rows) {
    if (r.t + 1e-12 < onset) continue;
    t.push_back(r.t);
    dev.push_back(std::abs(r.theta - std::numbers::pi));
    xdot.push_back(std::abs(r.x_dot));
  }
  const auto peak_it = std::max_element(dev.begin(), dev.end());
  const double peak = *peak_it;
  if (peak >= bands.fall_angle) {
    m.outcome = RunOutcome::kFell;
    return m;
  }
  m.peak_theta_dev = peak;
  m.peak_xdot = *std::max_element(xdot.begin(), xdot.end());

  // Settling: first sample after the last excursion outside the band.
  std::optional<std::size_t> last_out;
  for (std::size_t i = dev.size(); i-- > 0;) {
    if (dev[i] > bands.settle_band) {
      last_out = i;
      break;
    }
  }
  if (!last_out) {
    m.settling_time = 0.0;
  } else if (*last_out + 1 < t.size()) {
    m.settling_time = t[*last_out + 1] - onset;
  }

  // Rise: 90 % -> 10 % of the peak on the recovery after it.
  if (peak <= bands.settle_band) {
    m.rise_time = 0.0;
  } else {
    const auto p = static_cast<std::size_t>(peak_it - dev.begin());
    std::optional<double> t90, t10;
    for (std::size_t i = p; i < dev.size() && !t10; ++i) {
      if (!t90 && dev[i] <= 0.9 * peak) t90 = t[i];
      if (dev[i] <= 0.1 * peak) t10 = t[i];
    }
    if (t90 && t10) m.rise_time = *t10 - *t90;
  }

  // Steady state over the final window of the whole log.
  const double t_first = series.rows.front().t;
  const double t_last = series.rows.back().t;
  const double window_start = t_last - bands.final_window_fraction * (t_last - t_first);
  std::vector<double> wt, wx, wth;
  for (const auto& r : series.rows) {
    if (r.t < window_start) continue;
    wt.push_back(r.t);
    wx.push_back(std::abs(r.x));
    wth.push_back(std::abs(r.theta - std::numbers::pi));
  }
  m.sse_x = steady_state(wt, wx, bands.slope_threshold);
  m.sse_theta = steady_state(wt, wth, bands.slope_threshold);
  return m;
}

bool ordered_le(const std::optional<double>& a, const std::optional<double>& b) {
  if (!b) return true;
  if (!a) return false;
  return *a <= *b;
}

Disturbance Scenario::make_disturbance() const {
  if (kind == Kind::kImpulse) {
    impulse.validate();
    return [spec = impulse](double t) { return impulse_signal(spec, t); };
  }
  auto signal = std::make_shared<NoiseSignal>(noise);
  return [signal](double t) { return (*signal)(t); };
}

// ---------------------------------------------------------------------------------------

namespace {

std::string metric_text(const std::optional<double>& v, double scale = 1.0) {
  return v ? format_double(*v * scale) : std::string("inf");
}

std::optional<double> mean_of(const std::vector<const TransientMetrics*>& ms,
                              std::optional<double> TransientMetrics::*field) {
  double sum = 0.0;
  for (const auto* m : ms) {
    if (!(m->*field)) return std::nullopt;
    sum += *(m->*field);
  }
  return ms.empty() ? std::nullopt : std::optional<double>(sum / static_cast<double>(ms.size()));
}

std::string outcome_text(RunOutcome o) {
  switch (o) {
    case RunOutcome::kFell: return "fell";
    case RunOutcome::kDiverged: return "diverged";
    default: return "balanced";
  }
}

}  // namespace

bool BenchmarkTable::any_lost() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const auto& c) { return c.metrics.outcome != RunOutcome::kBalanced; });
}

void BenchmarkTable::write_csv(std::ostream& os) const {
  os << "controller,scenario,magnitude,settling_s,rise_ms,peak_theta_deg,peak_xdot,sse_theta,sse_x\n";
  const double deg = 180.0 / std::numbers::pi;
  auto emit = [&](const BenchmarkCell& c) {
    const auto& m = c.metrics;
    os << c.controller << ',' << c.scenario << ',' << c.magnitude << ',' << metric_text(m.settling_time)
       << ',' << metric_text(m.rise_time, 1000.0) << ',' << metric_text(m.peak_theta_dev, deg) << ','
       << metric_text(m.peak_xdot) << ',' << metric_text(m.sse_theta) << ',' << metric_text(m.sse_x)
       << '\n';
  };
  for (const auto& c : cells) emit(c);
  for (const auto& c : means) emit(c);
}

std::string BenchmarkTable::render_text() const {
  std::vector<std::string> names;
  for (const auto& c : cells) {
    if (std::find(names.begin(), names.end(), c.controller) == names.end()) names.push_back(c.controller);
  }
  const double deg = 180.0 / std::numbers::pi;
  std::ostringstream out;
  auto fixed = [](const std::optional<double>& v, double scale, int digits) {
    if (!v) return std::string("inf");
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << *v * scale;
    return s.str();
  };
  auto header = [&](const std::string& title) {
    out << title << '\n' << std::left << std::setw(28) << "Parameter";
    for (const auto& n : names) out << std::right << std::setw(14) << n;
    out << '\n';
  };
  auto line = [&](const std::string& label, const std::vector<const BenchmarkCell*>& row,
                  std::optional<double> TransientMetrics::*field, double scale, int digits) {
    out << std::left << std::setw(28) << label;
    for (const auto* c : row) out << std::right << std::setw(14) << (c ? fixed(c->metrics.*field, scale, digits) : "-");
    out << '\n';
  };
  auto status = [&](const std::vector<const BenchmarkCell*>& row) {
    out << std::left << std::setw(28) << "Outcome";
    for (const auto* c : row) out << std::right << std::setw(14) << (c ? outcome_text(c->metrics.outcome) : "-");
    out << '\n';
  };
  auto pick = [&](const std::vector<BenchmarkCell>& from, const std::string& scenario,
                  const std::string& magnitude) {
    std::vector<const BenchmarkCell*> row;
    for (const auto& n : names) {
      const BenchmarkCell* hit = nullptr;
      for (const auto& c : from) {
        if (c.controller == n && c.scenario == scenario && (magnitude.empty() || c.magnitude == magnitude)) {
          hit = &c;
          break;
        }
      }
      row.push_back(hit);
    }
    return row;
  };

  if (!means.empty()) {
    std::string mags;
    for (const auto& c : cells) {
      if (c.scenario == "impulse" && c.controller == names.front()) mags += (mags.empty() ? "" : ", ") + c.magnitude;
    }
    header("Impulse disturbance, mean over magnitudes " + mags + " N");
    const auto row = pick(means, "impulse", "mean");
    line("Settling time (s)", row, &TransientMetrics::settling_time, 1.0, 3);
    line("Deviation of theta (deg)", row, &TransientMetrics::peak_theta_dev, deg, 3);
    line("Rise time (ms)", row, &TransientMetrics::rise_time, 1000.0, 2);
    line("Steady state error theta", row, &TransientMetrics::sse_theta, 1.0, 6);
    line("Steady state error x", row, &TransientMetrics::sse_x, 1.0, 6);
    out << '\n';
  }
  std::vector<std::string> noise_mags;
  for (const auto& c : cells) {
    if (c.scenario == "noise" && c.controller == names.front()) noise_mags.push_back(c.magnitude);
  }
  for (const auto& mag : noise_mags) {
    header("White noise disturbance, power " + mag + " N^2");
    const auto row = pick(cells, "noise", mag);
    line("Max. deviation of theta (deg)", row, &TransientMetrics::peak_theta_dev, deg, 3);
    line("Max. deviation of x_dot (m/s)", row, &TransientMetrics::peak_xdot, 1.0, 4);
    status(row);
    out << '\n';
  }
  for (const auto& c : cells) {
    if (c.metrics.outcome != RunOutcome::kBalanced) {
      out << "note: " << c.controller << " / " << c.scenario << " " << c.magnitude << ": "
          << outcome_text(c.metrics.outcome) << '\n';
    }
  }
  return out.str();
}

BenchmarkTable run_benchmark(const PhysicalParams& params, const SimConfig& sim,
                             std::span<const BenchmarkEntry> controllers,
                             std::span<const Scenario> scenarios, unsigned threads,
                             const MetricBands& bands) {
  sim.validate();
  params.validate();
  const std::size_t total = controllers.size() * scenarios.size();
  BenchmarkTable table;
  table.cells.resize(total);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(total);
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const auto& entry = controllers[i / scenarios.size()];
      const auto& scenario = scenarios[i % scenarios.size()];
      try {
        auto controller = entry.prototype->clone();
        controller->reset();
        const TimeSeries series = run_closed_loop(sim, *controller, scenario.make_disturbance(), params);
        table.cells[i] = {entry.name, scenario.label(), format_double(scenario.magnitude()),
                          compute_metrics(series, scenario.onset(), bands)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto& entry : controllers) {
    std::vector<const TransientMetrics*> impulses;
    RunOutcome worst = RunOutcome::kBalanced;
    for (const auto& c : table.cells) {
      if (c.controller == entry.name && c.scenario == "impulse") {
        impulses.push_back(&c.metrics);
        worst = std::max(worst, c.metrics.outcome);
      }
    }
    if (impulses.empty()) continue;
    BenchmarkCell mean{entry.name, "impulse", "mean", {}};
    mean.metrics.settling_time = mean_of(impulses, &TransientMetrics::settling_time);
    mean.metrics.rise_time = mean_of(impulses, &TransientMetrics::rise_time);
    mean.metrics.peak_theta_dev = mean_of(impulses, &TransientMetrics::peak_theta_dev);
    mean.metrics.peak_xdot = mean_of(impulses, &TransientMetrics::peak_xdot);
    mean.metrics.sse_theta = mean_of(impulses, &TransientMetrics::sse_theta);
    mean.metrics.sse_x = mean_of(impulses, &TransientMetrics::sse_x);
    mean.metrics.outcome = worst;
    table.means.push_back(mean);
  }
  return table;
}

}  // namespace pendulum_lab
