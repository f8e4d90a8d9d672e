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

#include "pendulum_lab/anfis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/QR>
#include <json.hpp>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"

namespace pendulum_lab {

using nlohmann::json;

// ---------------------------------------------------------------------------------------
// Membership functions

double BellMf::operator()(double z) const {
  const double r = (z - c) / a;
  return 1.0 / (1.0 + std::pow(r * r, b));
}

BellMf::Partials BellMf::partials(double z) const {
  const double d = z - c;
  const double u = (d / a) * (d / a);
  if (u == 0.0) return {};
  const double ub = std::pow(u, b);
  const double mu = 1.0 / (1.0 + ub);
  const double mu2 = mu * mu;
  Partials p;
  p.a = 2.0 * b * mu2 * ub / a;
  p.b = -mu2 * ub * std::log(u);
  p.c = 2.0 * b * mu2 * ub / d;
  return p;
}

bool BellMf::valid() const {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && a > 0.0 && b > 0.0;
}

// ---------------------------------------------------------------------------------------
// Model structure

Eigen::Index AnfisModel::rule_count() const {
  Eigen::Index count = 1;
  for (const auto& mfs : premises) count *= static_cast<Eigen::Index>(mfs.size());
  return premises.empty() ? 0 : count;
}

std::vector<int> AnfisModel::rule_indices(Eigen::Index rule) const {
  std::vector<int> idx(premises.size());
  for (std::size_t k = premises.size(); k-- > 0;) {
    const auto m = static_cast<Eigen::Index>(premises[k].size());
    idx[k] = static_cast<int>(rule % m);
    rule /= m;
  }
  return idx;
}

void AnfisModel::validate() const {
  if (premises.empty()) throw InvalidArgument("anfis model: no inputs");
  for (const auto& mfs : premises) {
    if (mfs.empty()) throw InvalidArgument("anfis model: input without membership functions");
    for (const auto& mf : mfs) {
      if (!mf.valid()) throw InvalidArgument("anfis model: invalid membership function");
    }
  }
  if (consequents.rows() != rule_count() || consequents.cols() != input_count() + 1) {
    throw InvalidArgument("anfis model: consequent matrix has wrong shape");
  }
  if (!consequents.allFinite()) throw InvalidArgument("anfis model: non-finite consequent");
  if (!input_ranges.empty() && static_cast<Eigen::Index>(input_ranges.size()) != input_count()) {
    throw InvalidArgument("anfis model: input_ranges size mismatch");
  }
}

AnfisModel AnfisModel::grid(std::span<const std::pair<double, double>> ranges, int mfs_per_input) {
  if (ranges.empty() || mfs_per_input < 1) {
    throw InvalidArgument("anfis grid: need at least one input and one MF per input");
  }
  AnfisModel model;
  model.input_ranges.assign(ranges.begin(), ranges.end());
  for (const auto& [lo, hi] : ranges) {
    if (!(hi >= lo)) throw InvalidArgument("anfis grid: input range max < min");
    const double span = hi - lo;
    std::vector<BellMf> mfs;
    if (mfs_per_input == 1) {
      mfs.push_back({span > 0.0 ? span / 2.0 : 1.0, 2.0, 0.5 * (lo + hi)});
    } else {
      const double width = span > 0.0 ? span / (2.0 * (mfs_per_input - 1)) : 1.0;
      for (int q = 0; q < mfs_per_input; ++q) {
        mfs.push_back({width, 2.0, lo + span * q / (mfs_per_input - 1)});
      }
    }
    model.premises.push_back(std::move(mfs));
  }
  model.consequents = Eigen::MatrixXd::Zero(model.rule_count(), model.input_count() + 1);
  return model;
}

// ---------------------------------------------------------------------------------------
// Forward pass

namespace {

// Membership values mu[k][q] for one input vector.
std::vector<std::vector<double>> memberships(const AnfisModel& model,
                                             const Eigen::Ref<const Eigen::VectorXd>& input) {
  std::vector<std::vector<double>> mu(model.premises.size());
  for (std::size_t k = 0; k < model.premises.size(); ++k) {
    mu[k].reserve(model.premises[k].size());
    for (const auto& mf : model.premises[k]) mu[k].push_back(mf(input(static_cast<Eigen::Index>(k))));
  }
  return mu;
}

Eigen::VectorXd strengths_from(const AnfisModel& model, const std::vector<std::vector<double>>& mu) {
  const Eigen::Index m = model.rule_count();
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto idx = model.rule_indices(j);
    double prod = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) prod *= mu[k][idx[k]];
    w(j) = prod;
  }
  return w;
}

void check_input(const AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& input) {
  if (input.size() != model.input_count()) throw InvalidArgument("anfis: input dimension mismatch");
  if (!input.allFinite()) throw InvalidArgument("anfis: non-finite input");
}

}  // namespace

Eigen::VectorXd firing_strengths(const AnfisModel& model,
                                 const Eigen::Ref<const Eigen::VectorXd>& input) {
  check_input(model, input);
  return strengths_from(model, memberships(model, input));
}

Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& w) {
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("anfis: firing strengths sum to zero");
  }
  return w / total;
}

double anfis_infer(const AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& input) {
  const Eigen::VectorXd wbar = normalize(firing_strengths(model, input));
  const Eigen::Index n = model.input_count();
  const Eigen::VectorXd rule_out =
      model.consequents.leftCols(n) * input + model.consequents.col(n);
  return wbar.dot(rule_out);
}

// ---------------------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (inputs.rows() != targets.size() || inputs.cols() != 4) {
    throw InvalidArgument("dataset: expected N x 4 inputs and N targets");
  }
  if (!inputs.allFinite() || !targets.allFinite()) throw InvalidArgument("dataset: non-finite entry");
  std::vector<char> seen(static_cast<std::size_t>(size()), 0);
  for (const auto* split : {&train, &test}) {
    for (Eigen::Index i : *split) {
      if (i < 0 || i >= size()) throw InvalidArgument("dataset: split index out of range");
      if (seen[static_cast<std::size_t>(i)]++) throw InvalidArgument("dataset: train and test overlap");
    }
  }
}

void Dataset::write_csv(std::ostream& os) const {
  os << "x,x_dot,theta_dev,theta_dot,u\n";
  for (Eigen::Index i = 0; i < size(); ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) os << format_double(inputs(i, k)) << ',';
    os << format_double(targets(i)) << '\n';
  }
}

Dataset Dataset::read_csv(std::istream& is, Eigen::Index train_count) {
  std::string line;
  if (!std::getline(is, line) || line != "x,x_dot,theta_dev,theta_dot,u") {
    throw InvalidArgument("dataset csv: missing or unexpected header");
  }
  std::vector<std::array<double, 5>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 5> row{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      const std::size_t end = k < 4 ? line.find(',', start) : line.size();
      if (end == std::string::npos) {
        throw InvalidArgument("dataset csv: too few fields on line " + std::to_string(line_no));
      }
      try {
        row[k] = parse_double(std::string_view(line).substr(start, end - start));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("dataset csv line " + std::to_string(line_no) + ": " + e.what());
      }
      start = end + 1;
    }
    rows.push_back(row);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (train_count < 0 || train_count > n) throw InvalidArgument("dataset csv: fewer rows than train_count");
  Dataset data;
  data.inputs.resize(n, 4);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) data.inputs(i, k) = rows[static_cast<std::size_t>(i)][k];
    data.targets(i) = rows[static_cast<std::size_t>(i)][4];
    (i < train_count ? data.train : data.test).push_back(i);
  }
  data.validate();
  return data;
}

Dataset generate_dataset(std::span<const TimeSeries> runs, Eigen::Index train_count,
                         Eigen::Index test_count, std::uint64_t seed) {
  if (train_count < 1 || test_count < 0) throw InvalidArgument("generate_dataset: bad split sizes");
  std::vector<const TimeSeries::Row*> pool;
  for (const auto& run : runs) {
    if (run.diverged) continue;
    for (const auto& row : run.rows) pool.push_back(&row);
  }
  const auto total = static_cast<std::size_t>(train_count + test_count);
  if (pool.size() < total) {
    throw InvalidArgument("generate_dataset: " + std::to_string(pool.size()) +
                          " logged rows, need " + std::to_string(total));
  }

  // Degeneracy guard: every input column must vary.
  const auto column = [](const TimeSeries::Row& r, int k) {
    switch (k) {
      case 0: return r.x;
      case 1: return r.x_dot;
      case 2: return r.theta - std::numbers::pi;
      default: return r.theta_dot;
    }
  };
  for (int k = 0; k < 4; ++k) {
    const auto [lo, hi] = std::minmax_element(pool.begin(), pool.end(), [&](auto* a, auto* b) {
      return column(*a, k) < column(*b, k);
    });
    if (!(column(**hi, k) > column(**lo, k))) {
      throw InvalidArgument("generate_dataset: degenerate logs (input " + std::to_string(k) +
                            " has zero variance)");
    }
  }

  // Partial Fisher-Yates; raw engine output keeps the draw identical across standard libraries.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + train_count);
  std::sort(order.begin() + train_count, order.begin() + static_cast<std::ptrdiff_t>(total));

  Dataset data;
  data.inputs.resize(static_cast<Eigen::Index>(total), 4);
  data.targets.resize(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < total; ++i) {
    const auto& r = *pool[order[i]];
    const auto row = static_cast<Eigen::Index>(i);
    for (int k = 0; k < 4; ++k) data.inputs(row, k) = column(r, k);
    data.targets(row) = r.u;
    (row < train_count ? data.train : data.test).push_back(row);
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------------------
// Training

Eigen::MatrixXd consequent_design_matrix(const AnfisModel& model, const Eigen::MatrixXd& inputs,
                                         std::span<const Eigen::Index> rows) {
  const Eigen::Index n = model.input_count();
  const Eigen::Index m = model.rule_count();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), m * (n + 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Eigen::VectorXd z = inputs.row(rows[r]).transpose();
    const Eigen::VectorXd wbar = normalize(firing_strengths(model, z));
    const auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < m; ++j) {
      X.block(i, j * (n + 1), 1, n) = wbar(j) * z.transpose();
      X(i, j * (n + 1) + n) = wbar(j);
    }
  }
  return X;
}

bool solve_consequents(AnfisModel& model, const Dataset& data, std::span<const Eigen::Index> rows) {
  const Eigen::Index n = model.input_count();
  const Eigen::Index m = model.rule_count();
  const Eigen::MatrixXd X = consequent_design_matrix(model, data.inputs, rows);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y(static_cast<Eigen::Index>(r)) = data.targets(rows[r]);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  const Eigen::VectorXd theta = cod.solve(y);
  for (Eigen::Index j = 0; j < m; ++j) {
    model.consequents.row(j) = theta.segment(j * (n + 1), n + 1).transpose();
  }
  return cod.rank() < X.cols();
}

double rmse(const AnfisModel& model, const Dataset& data, std::span<const Eigen::Index> rows) {
  if (rows.empty()) return 0.0;
  double sse = 0.0;
  for (Eigen::Index i : rows) {
    const double e = anfis_infer(model, data.inputs.row(i).transpose()) - data.targets(i);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(rows.size()));
}

Eigen::VectorXd premise_parameters(const AnfisModel& model) {
  std::vector<double> flat;
  for (const auto& mfs : model.premises) {
    for (const auto& mf : mfs) flat.insert(flat.end(), {mf.a, mf.b, mf.c});
  }
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void set_premise_parameters(AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& params) {
  Eigen::Index p = 0;
  for (auto& mfs : model.premises) {
    for (auto& mf : mfs) {
      if (p + 3 > params.size()) throw InvalidArgument("set_premise_parameters: too few values");
      mf = {params(p), params(p + 1), params(p + 2)};
      p += 3;
    }
  }
  if (p != params.size()) throw InvalidArgument("set_premise_parameters: too many values");
}

Eigen::VectorXd premise_gradient(const AnfisModel& model, const Dataset& data,
                                 std::span<const Eigen::Index> rows) {
  const Eigen::Index n = model.input_count();
  const Eigen::Index m = model.rule_count();
  std::vector<Eigen::Index> offset(model.premises.size());
  Eigen::Index count = 0;
  for (std::size_t k = 0; k < model.premises.size(); ++k) {
    offset[k] = count;
    count += 3 * static_cast<Eigen::Index>(model.premises[k].size());
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(count);
  if (rows.empty()) return grad;

  for (Eigen::Index i : rows) {
    const Eigen::VectorXd z = data.inputs.row(i).transpose();
    const auto mu = memberships(model, z);
    const Eigen::VectorXd w = strengths_from(model, mu);
    const double total = w.sum();
    if (!(total > 0.0)) throw NumericalError("premise_gradient: firing strengths sum to zero");
    const Eigen::VectorXd f = model.consequents.leftCols(n) * z + model.consequents.col(n);
    const double y_hat = w.dot(f) / total;
    const double dE_dy = 2.0 * (y_hat - data.targets(i));

    // dy/dmu[k][q] = sum over rules using (k, q) of (f_j - y_hat) / total * prod_{k' != k} mu.
    std::vector<std::vector<double>> dy_dmu(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) dy_dmu[k].assign(mu[k].size(), 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto idx = model.rule_indices(j);
      const double coeff = (f(j) - y_hat) / total;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        double others = 1.0;
        for (std::size_t k2 = 0; k2 < idx.size(); ++k2) {
          if (k2 != k) others *= mu[k2][idx[k2]];
        }
        dy_dmu[k][idx[k]] += coeff * others;
      }
    }
    for (std::size_t k = 0; k < mu.size(); ++k) {
      for (std::size_t q = 0; q < mu[k].size(); ++q) {
        const auto p = model.premises[k][q].partials(z(static_cast<Eigen::Index>(k)));
        const double s = dE_dy * dy_dmu[k][q];
        const Eigen::Index base = offset[k] + 3 * static_cast<Eigen::Index>(q);
        grad(base) += s * p.a;
        grad(base + 1) += s * p.b;
        grad(base + 2) += s * p.c;
      }
    }
  }
  return grad / static_cast<double>(rows.size());
}

double TrainResult::relative_error_percent() const {
  if (history.empty() || !(output_range > 0.0)) return 0.0;
  return 100.0 * history.back().train_rmse / output_range;
}

TrainResult train_hybrid(const Dataset& data, const TrainConfig& config) {
  data.validate();
  if (config.epochs < 1) throw InvalidArgument("train_hybrid: epochs must be >= 1");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("train_hybrid: learning rate must be > 0");

  std::vector<std::pair<double, double>> ranges(4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i : data.train) {
      lo = std::min(lo, data.inputs(i, k));
      hi = std::max(hi, data.inputs(i, k));
    }
    ranges[static_cast<std::size_t>(k)] = {lo, hi};
  }

  TrainResult result;
  result.model = AnfisModel::grid(ranges, config.mfs_per_input);
  const Eigen::Index params_per_rule = result.model.input_count() + 1;
  if (static_cast<Eigen::Index>(data.train.size()) < result.model.rule_count() * params_per_rule) {
    throw InvalidArgument("train_hybrid: fewer training rows than consequent parameters");
  }
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -y_lo;
  for (Eigen::Index i : data.train) {
    y_lo = std::min(y_lo, data.targets(i));
    y_hi = std::max(y_hi, data.targets(i));
  }
  result.output_range = y_hi - y_lo;

  AnfisModel& model = result.model;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    result.rank_deficient |= solve_consequents(model, data, data.train);
    const double train_err = rmse(model, data, data.train);
    result.history.push_back({epoch, train_err, rmse(model, data, data.test)});
    if (epoch == config.epochs) break;

    const Eigen::VectorXd params = premise_parameters(model);
    const Eigen::VectorXd grad = premise_gradient(model, data, data.train);
    if (!grad.allFinite() || grad.isZero(0.0)) continue;
    double step = config.learning_rate;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings && !accepted; ++h, step *= 0.5) {
      AnfisModel trial = model;
      set_premise_parameters(trial, params - step * grad);
      bool ok = true;
      for (const auto& mfs : trial.premises) {
        for (const auto& mf : mfs) ok = ok && mf.valid();
      }
      if (ok && rmse(trial, data, data.train) <= train_err + config.line_search_tolerance) {
        model.premises = std::move(trial.premises);
        accepted = true;
      }
    }
    if (!accepted) result.step_flagged = true;
  }
  model.metadata.epochs = config.epochs;
  model.metadata.train_rmse = result.history.back().train_rmse;
  model.metadata.test_rmse = result.history.back().test_rmse;
  return result;
}

// ---------------------------------------------------------------------------------------
// Serialization

std::string anfis_model_to_json(const AnfisModel& model) {
  json doc;
  doc["premises"] = json::array();
  for (const auto& mfs : model.premises) {
    json row = json::array();
    for (const auto& mf : mfs) row.push_back({{"a", mf.a}, {"b", mf.b}, {"c", mf.c}});
    doc["premises"].push_back(row);
  }
  doc["consequents"] = json::array();
  for (Eigen::Index j = 0; j < model.consequents.rows(); ++j) {
    json row = json::array();
    for (Eigen::Index k = 0; k < model.consequents.cols(); ++k) row.push_back(model.consequents(j, k));
    doc["consequents"].push_back(row);
  }
  doc["input_ranges"] = json::array();
  for (const auto& [lo, hi] : model.input_ranges) doc["input_ranges"].push_back({lo, hi});
  doc["metadata"] = {{"epochs", model.metadata.epochs},
                     {"rmse", {{"train", model.metadata.train_rmse}, {"test", model.metadata.test_rmse}}}};
  return doc.dump(2) + "\n";
}

AnfisModel anfis_model_from_json(std::string_view text) {
  static constexpr std::array<const char*, 4> kSections = {"premises", "consequents",
                                                           "input_ranges", "metadata"};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string missing;
    for (const char* s : kSections) {
      if (text.find(std::string("\"") + s + "\"") == std::string_view::npos) {
        missing += missing.empty() ? s : std::string(", ") + s;
      }
    }
    std::string msg = "anfis model: malformed JSON at byte " + std::to_string(e.byte);
    if (!missing.empty()) msg += "; missing section(s): " + missing;
    throw InvalidArgument(msg);
  }
  for (const char* s : kSections) {
    if (!doc.is_object() || !doc.contains(s)) {
      throw InvalidArgument(std::string("anfis model: missing section '") + s + "'");
    }
  }
  AnfisModel model;
  try {
    for (const auto& row : doc.at("premises")) {
      std::vector<BellMf> mfs;
      for (const auto& mf : row) {
        mfs.push_back({mf.at("a").get<double>(), mf.at("b").get<double>(), mf.at("c").get<double>()});
      }
      model.premises.push_back(std::move(mfs));
    }
    const auto& cons = doc.at("consequents");
    const auto rows = static_cast<Eigen::Index>(cons.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(cons.at(0).size()) : 0;
    model.consequents.resize(rows, cols);
    for (Eigen::Index j = 0; j < rows; ++j) {
      const auto& row = cons.at(static_cast<std::size_t>(j));
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        throw InvalidArgument("anfis model: ragged consequent row " + std::to_string(j));
      }
      for (Eigen::Index k = 0; k < cols; ++k) model.consequents(j, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    for (const auto& r : doc.at("input_ranges")) {
      model.input_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    }
    const auto& meta = doc.at("metadata");
    model.metadata.epochs = meta.at("epochs").get<int>();
    model.metadata.train_rmse = meta.at("rmse").at("train").get<double>();
    model.metadata.test_rmse = meta.at("rmse").at("test").get<double>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("anfis model: ") + e.what());
  }
  model.validate();
  return model;
}

void write_history_csv(std::ostream& os, std::span<const EpochRecord> history) {
  os << "epoch,train_rmse,test_rmse\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << format_double(r.train_rmse) << ',' << format_double(r.test_rmse) << '\n';
  }
}

}  // namespace pendulum_lab
