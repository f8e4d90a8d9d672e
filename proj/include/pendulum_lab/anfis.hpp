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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pendulum_lab/simulate.hpp"

namespace pendulum_lab {

/// Generalized bell membership 1 / (1 + |(z - c) / a|^(2b)).
struct BellMf {
  double a = 1.0;  // half width, > 0
  double b = 2.0;  // shape, > 0
  double c = 0.0;  // center

  struct Partials {
    double a = 0.0, b = 0.0, c = 0.0;
  };

  double operator()(double z) const;
  Partials partials(double z) const;
  bool valid() const;
};

/**
 * First-order Takagi-Sugeno model on a grid partition. Rule j combines one membership
 * function per input; rules are enumerated lexicographically over MF indices with input 0
 * as the most significant digit. Consequent row j holds (k_1, ..., k_n, bias).
 */
struct AnfisModel {
  std::vector<std::vector<BellMf>> premises;  // [input][mf]
  Eigen::MatrixXd consequents;                // rules x (inputs + 1)
  std::vector<std::pair<double, double>> input_ranges;

  struct Metadata {
    int epochs = 0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
  } metadata;

  Eigen::Index input_count() const { return static_cast<Eigen::Index>(premises.size()); }
  Eigen::Index rule_count() const;
  /// MF index per input for the given rule.
  std::vector<int> rule_indices(Eigen::Index rule) const;
  void validate() const;

  /// Grid initialization: MF centers spread evenly over [min, max] of each input (the
  /// two-MF case puts them at min and max), width = range / 2, shape 2. Consequents zero.
  static AnfisModel grid(std::span<const std::pair<double, double>> ranges, int mfs_per_input);
};

Eigen::VectorXd firing_strengths(const AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& input);

/// w / sum(w). Throws NumericalError when the sum is not positive.
Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& w);

double anfis_infer(const AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& input);

/// Rows of (x, x_dot, theta_dev, theta_dot) with target u and a train/test split.
struct Dataset {
  Eigen::MatrixXd inputs;  // N x 4
  Eigen::VectorXd targets;
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;

  Eigen::Index size() const { return targets.size(); }
  void validate() const;

  /// CSV with header x,x_dot,theta_dev,theta_dot,u, rows in storage order.
  void write_csv(std::ostream& os) const;
  /// Reads rows; the first `train_count` become the training split, the rest the test split.
  static Dataset read_csv(std::istream& is, Eigen::Index train_count);
};

/**
 * Pools (deviation state, command) pairs from non-diverged logs and draws
 * train_count + test_count distinct rows uniformly at random (seeded). Training rows are
 * stored first, then test rows, each in log order. Throws InvalidArgument when the pool
 * is too small or an input column has zero variance.
 */
Dataset generate_dataset(std::span<const TimeSeries> runs, Eigen::Index train_count,
                         Eigen::Index test_count, std::uint64_t seed);

struct TrainConfig {
  int epochs = 50;
  int mfs_per_input = 2;
  double learning_rate = 0.01;
  int max_halvings = 20;
  double line_search_tolerance = 1e-12;  // allowed RMSE increase when accepting a step
};

struct EpochRecord {
  int epoch = 0;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
};

struct TrainResult {
  AnfisModel model;
  std::vector<EpochRecord> history;
  bool rank_deficient = false;  // least-squares system solved in minimum-norm sense
  bool step_flagged = false;    // a premise step kept increasing the error after all halvings
  double output_range = 0.0;    // max - min of training targets

  /// Final training RMSE as a percentage of the training output range.
  double relative_error_percent() const;
};

/// Design matrix of the consequent least-squares problem for the given rows.
Eigen::MatrixXd consequent_design_matrix(const AnfisModel& model, const Eigen::MatrixXd& inputs,
                                         std::span<const Eigen::Index> rows);

/// Solves the consequents by linear least squares with premises frozen. Returns true
/// when the system was rank deficient (minimum-norm solution used).
bool solve_consequents(AnfisModel& model, const Dataset& data, std::span<const Eigen::Index> rows);

double rmse(const AnfisModel& model, const Dataset& data, std::span<const Eigen::Index> rows);

/// Premise parameters flattened as (a, b, c) per MF, inputs outer, MFs inner.
Eigen::VectorXd premise_parameters(const AnfisModel& model);
void set_premise_parameters(AnfisModel& model, const Eigen::Ref<const Eigen::VectorXd>& params);

/// Gradient of the mean squared error over `rows` with respect to premise_parameters().
Eigen::VectorXd premise_gradient(const AnfisModel& model, const Dataset& data,
                                 std::span<const Eigen::Index> rows);

/**
 * Hybrid learning. Each epoch solves the consequents exactly and records train/test
 * RMSE; between epochs the premises take one gradient step, halved until the training
 * error does not increase. The returned model is the one right after the last
 * consequent solve.
 */
TrainResult train_hybrid(const Dataset& data, const TrainConfig& config);

std::string anfis_model_to_json(const AnfisModel& model);
/// Throws InvalidArgument with the byte position or the name of a missing section.
AnfisModel anfis_model_from_json(std::string_view text);

void write_history_csv(std::ostream& os, std::span<const EpochRecord> history);

}  // namespace pendulum_lab
