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

#include "pendulum_lab/plant.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/io.hpp"

namespace pendulum_lab {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw InvalidArgument(std::string("physical parameter '") + name + "' must be finite and > 0");
  }
}

std::complex<double> horner(std::span<const double> c, std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (double coeff : c) acc = acc * s + coeff;
  return acc;
}

std::complex<double> horner_derivative(std::span<const double> c, std::complex<double> s) {
  std::complex<double> acc = 0.0;
  const std::size_t n = c.size() - 1;
  for (std::size_t i = 0; i < n; ++i) acc = acc * s + c[i] * static_cast<double>(n - i);
  return acc;
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(cart_mass, "cart_mass");
  require_positive(pend_mass, "pend_mass");
  require_positive(inertia, "inertia");
  require_positive(half_length, "half_length");
  require_positive(gravity, "gravity");
  if (!std::isfinite(friction) || friction < 0.0) {
    throw InvalidArgument("physical parameter 'friction' must be finite and >= 0");
  }
  if (alpha() <= 0.0) throw InvalidArgument("physical parameters give a singular mass matrix");
}

double PhysicalParams::alpha() const {
  const double ml = pend_mass * half_length;
  return (cart_mass + pend_mass) * (inertia + pend_mass * half_length * half_length) - ml * ml;
}

bool PlantState::finite() const {
  return std::isfinite(x) && std::isfinite(x_dot) && std::isfinite(theta) &&
         std::isfinite(theta_dot);
}

namespace {

// Trig measured from the nearer equilibrium so both rest states are exact fixed points.
std::pair<double, double> sin_cos(double theta) {
  const double phi = theta - std::numbers::pi;
  if (std::abs(phi) < std::abs(theta)) return {-std::sin(phi), -std::cos(phi)};
  return {std::sin(theta), std::cos(theta)};
}

}  // namespace

StateVector detail::derivative_unchecked(const StateVector& state, double u,
                                        const PhysicalParams& params) {
  const double total_mass = params.cart_mass + params.pend_mass;
  const double ml = params.pend_mass * params.half_length;
  const double pivot_inertia = params.inertia + ml * params.half_length;
  const auto [s, c] = sin_cos(state(2));

  const double m11 = total_mass;
  const double m12 = ml * c;
  const double m22 = pivot_inertia;
  const double det = m11 * m22 - m12 * m12;

  const double f1 = u - params.friction * state(1) + ml * s * state(3) * state(3);
  const double f2 = -ml * params.gravity * s;

  const double x_ddot = (m22 * f1 - m12 * f2) / det;
  const double theta_ddot = (m11 * f2 - m12 * f1) / det;
  return {state(1), x_ddot, state(3), theta_ddot};
}

StateVector nonlinear_derivative(const PlantState& state, double u, const PhysicalParams& params) {
  if (!state.finite() || !std::isfinite(u)) {
    throw InvalidArgument("nonlinear_derivative: non-finite state or force");
  }
  return detail::derivative_unchecked(state.vector(), u, params);
}

double total_energy(const PlantState& state, const PhysicalParams& params) {
  const double ml = params.pend_mass * params.half_length;
  const double c = std::cos(state.theta);
  const double kinetic =
      0.5 * (params.cart_mass + params.pend_mass) * state.x_dot * state.x_dot +
      0.5 * (params.inertia + ml * params.half_length) * state.theta_dot * state.theta_dot +
      ml * c * state.x_dot * state.theta_dot;
  const double potential = -ml * params.gravity * c;
  return kinetic + potential;
}

LinearStateSpace linearize(const PhysicalParams& params) {
  params.validate();
  const double alpha = params.alpha();
  const double ml = params.pend_mass * params.half_length;
  const double pivot_inertia = params.inertia + ml * params.half_length;
  const double total_mass = params.cart_mass + params.pend_mass;
  const double b = params.friction;
  const double g = params.gravity;

  LinearStateSpace ss;
  ss.A(0, 1) = 1.0;
  ss.A(1, 1) = -pivot_inertia * b / alpha;
  ss.A(1, 2) = ml * ml * g / alpha;
  ss.A(2, 3) = 1.0;
  ss.A(3, 1) = -ml * b / alpha;
  ss.A(3, 2) = total_mass * ml * g / alpha;
  ss.B(1) = pivot_inertia / alpha;
  ss.B(3) = ml / alpha;
  ss.C(0, 0) = 1.0;
  ss.C(1, 2) = 1.0;
  return ss;
}

void TransferFunction::validate() const {
  if (denominator.empty() || denominator.front() == 0.0) {
    throw InvalidArgument("transfer function: leading denominator coefficient must be nonzero");
  }
}

std::complex<double> TransferFunction::evaluate(std::complex<double> s) const {
  return horner(numerator, s) / horner(denominator, s);
}

PlantTransferFunctions transfer_functions(const PhysicalParams& params) {
  params.validate();
  const double alpha = params.alpha();
  const double ml = params.pend_mass * params.half_length;
  const double pivot_inertia = params.inertia + ml * params.half_length;
  const double total_mass = params.cart_mass + params.pend_mass;
  const double b = params.friction;
  const double g = params.gravity;

  const double c2 = b * pivot_inertia / alpha;
  const double c1 = -total_mass * ml * g / alpha;
  const double c0 = -b * ml * g / alpha;

  PlantTransferFunctions tfs;
  tfs.pendulum.numerator = {ml / alpha, 0.0};
  tfs.pendulum.denominator = {1.0, c2, c1, c0};
  tfs.cart.numerator = {pivot_inertia / alpha, 0.0, -ml * g / alpha};
  tfs.cart.denominator = {1.0, c2, c1, c0, 0.0};
  return tfs;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients) {
  auto first = std::find_if(coefficients.begin(), coefficients.end(),
                            [](double c) { return c != 0.0; });
  if (first == coefficients.end()) throw InvalidArgument("polynomial_roots: zero polynomial");
  for (auto it = first; it != coefficients.end(); ++it) {
    if (!std::isfinite(*it)) throw InvalidArgument("polynomial_roots: non-finite coefficient");
  }
  std::vector<double> c(first, coefficients.end());

  // Trailing zeros are exact roots at the origin.
  std::vector<std::complex<double>> roots;
  while (c.size() > 1 && c.back() == 0.0) {
    roots.emplace_back(0.0, 0.0);
    c.pop_back();
  }
  const auto n = static_cast<Eigen::Index>(c.size()) - 1;
  if (n == 0) return roots;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = -c[j + 1] / c[0];
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("polynomial_roots: companion eigenvalue solve failed");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    std::complex<double> z = solver.eigenvalues()(i);
    for (int iter = 0; iter < 3; ++iter) {
      const std::complex<double> p = horner(c, z);
      const std::complex<double> dp = horner_derivative(c, z);
      if (dp == 0.0) break;
      const std::complex<double> candidate = z - p / dp;
      if (std::abs(horner(c, candidate)) >= std::abs(p)) break;
      z = candidate;
    }
    if (z.imag() != 0.0 && std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z.real()))) {
      z.imag(0.0);
    }
    roots.push_back(z);
  }
  return roots;
}

std::vector<std::complex<double>> poles(const TransferFunction& tf) {
  tf.validate();
  if (tf.denominator.size() < 2) throw InvalidArgument("poles: denominator degree must be >= 1");
  auto roots = polynomial_roots(tf.denominator);
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return roots;
}

ControllabilityReport controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw InvalidArgument("controllability: dimension mismatch between A and B");
  }
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  ControllabilityReport report;
  report.matrix.resize(n, n * m);
  Eigen::MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    report.matrix.middleCols(k * m, m) = block;
    block = A * block;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(report.matrix);
  const auto& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? 1e-8 * sigma(0) : 0.0;
  report.rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) ++report.rank;
  }
  if (report.matrix.rows() == report.matrix.cols()) {
    report.determinant = report.matrix.fullPivLu().determinant();
  }
  return report;
}

ControllabilityReport controllability(const LinearStateSpace& ss) {
  return controllability(Eigen::MatrixXd(ss.A), Eigen::MatrixXd(ss.B));
}

std::vector<LocusPoint> root_locus_sweep(const TransferFunction& tf, std::span<const double> gains) {
  tf.validate();
  if (tf.numerator.size() > tf.denominator.size()) {
    throw InvalidArgument("root_locus_sweep: improper transfer function");
  }
  std::vector<LocusPoint> locus;
  locus.reserve(gains.size());
  const std::size_t offset = tf.denominator.size() - tf.numerator.size();
  for (double k : gains) {
    if (!std::isfinite(k) || k < 0.0) {
      throw InvalidArgument("root_locus_sweep: gains must be finite and non-negative");
    }
    std::vector<double> closed = tf.denominator;
    for (std::size_t i = 0; i < tf.numerator.size(); ++i) closed[offset + i] += k * tf.numerator[i];
    locus.push_back({k, poles(TransferFunction{tf.numerator, closed})});
  }
  return locus;
}

void write_poles_csv(std::ostream& os, std::span<const std::complex<double>> poles) {
  os << "index,real,imag\n";
  for (std::size_t i = 0; i < poles.size(); ++i) {
    os << i << ',' << format_double(poles[i].real()) << ',' << format_double(poles[i].imag())
       << '\n';
  }
}

void write_locus_csv(std::ostream& os, std::span<const LocusPoint> locus) {
  os << "gain,index,real,imag\n";
  for (const auto& point : locus) {
    for (std::size_t i = 0; i < point.poles.size(); ++i) {
      os << format_double(point.gain) << ',' << i << ',' << format_double(point.poles[i].real())
         << ',' << format_double(point.poles[i].imag()) << '\n';
    }
  }
}

}  // namespace pendulum_lab
