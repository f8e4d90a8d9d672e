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

#include <complex>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pendulum_lab {

using StateVector = Eigen::Vector4d;

/**
 * Physical constants of the cart and pendulum.
 *
 * `half_length` is the pivot to center-of-mass distance. Defaults reproduce the
 * reference plant; the inertia default of 0.006 kg m^2 equals m_p l^2 / 3, which is the
 * value the reference pole locations and controllability matrix are consistent with.
 */
struct PhysicalParams {
  double cart_mass = 0.5;    // kg
  double pend_mass = 0.2;    // kg
  double friction = 0.1;     // N s / m
  double inertia = 0.006;    // kg m^2, about the center of mass
  double half_length = 0.3;  // m
  double gravity = 9.8;      // m / s^2

  /// Throws InvalidArgument unless all fields are finite and positive (friction may be 0).
  void validate() const;

  /// (m_c + m_p)(J + m_p l^2) - (m_p l)^2, the determinant of the upright mass matrix.
  double alpha() const;
};

/**
 * Cart and pendulum state. theta is measured from the hanging position, so theta = pi
 * is upright. Linear-model operations work in the deviation phi = theta - pi.
 */
struct PlantState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = std::numbers::pi;
  double theta_dot = 0.0;
  double t = 0.0;

  StateVector vector() const { return {x, x_dot, theta, theta_dot}; }
  /// (x, x_dot, theta - pi, theta_dot)
  StateVector deviation() const { return {x, x_dot, theta - std::numbers::pi, theta_dot}; }
  bool finite() const;

  static PlantState from_vector(const StateVector& v, double t = 0.0) {
    return {v(0), v(1), v(2), v(3), t};
  }
};

/// The upright equilibrium (0, 0, pi, 0).
inline StateVector upright_equilibrium() { return {0.0, 0.0, std::numbers::pi, 0.0}; }

/**
 * Linearization about the upright equilibrium in deviation coordinates
 * (x, x_dot, phi, phi_dot). Outputs are cart position and pendulum angle.
 */
struct LinearStateSpace {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d B = Eigen::Vector4d::Zero();
  Eigen::Matrix<double, 2, 4> C = Eigen::Matrix<double, 2, 4>::Zero();
  Eigen::Vector2d D = Eigen::Vector2d::Zero();
};

/// Coefficients in descending powers of s.
struct TransferFunction {
  std::vector<double> numerator;
  std::vector<double> denominator;

  void validate() const;
  std::complex<double> evaluate(std::complex<double> s) const;
};

struct PlantTransferFunctions {
  TransferFunction cart;      // X(s) / U(s)
  TransferFunction pendulum;  // Phi(s) / U(s)
};

struct ControllabilityReport {
  Eigen::MatrixXd matrix;  // [B | AB | A^2 B | ...]
  int rank = 0;
  double determinant = 0.0;  // only meaningful when the matrix is square
};

struct LocusPoint {
  double gain = 0.0;
  std::vector<std::complex<double>> poles;
};

/**
 * Time derivative (x_dot, x_ddot, theta_dot, theta_ddot) of the nonlinear dynamics under
 * horizontal cart force u. Solves
 *
 *   [ m_c + m_p        m_p l cos(theta) ] [x_ddot    ]   [ u - b x_dot + m_p l sin(theta) theta_dot^2 ]
 *   [ m_p l cos(theta) J + m_p l^2      ] [theta_ddot] = [ -m_p g l sin(theta)                        ]
 *
 * Throws InvalidArgument on non-finite state or force.
 */
StateVector nonlinear_derivative(const PlantState& state, double u, const PhysicalParams& params);

namespace detail {
/// nonlinear_derivative without the finiteness check; used inside integrators.
StateVector derivative_unchecked(const StateVector& state, double u, const PhysicalParams& params);
}  // namespace detail

/// Total mechanical energy: kinetic plus gravitational (zero at pivot height).
double total_energy(const PlantState& state, const PhysicalParams& params);

LinearStateSpace linearize(const PhysicalParams& params);

/// Both transfer functions in monic-denominator form.
PlantTransferFunctions transfer_functions(const PhysicalParams& params);

/**
 * Roots of a polynomial given in descending powers, via eigenvalues of the companion
 * matrix followed by a Newton polish. Leading zeros are stripped.
 */
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients);

/// Roots of the denominator, sorted by descending real part.
std::vector<std::complex<double>> poles(const TransferFunction& tf);

ControllabilityReport controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
ControllabilityReport controllability(const LinearStateSpace& ss);

/// Closed-loop poles of den + k num for each gain.
std::vector<LocusPoint> root_locus_sweep(const TransferFunction& tf, std::span<const double> gains);

void write_poles_csv(std::ostream& os, std::span<const std::complex<double>> poles);
void write_locus_csv(std::ostream& os, std::span<const LocusPoint> locus);

}  // namespace pendulum_lab
