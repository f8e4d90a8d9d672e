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

#include <Eigen/Core>

namespace pendulum_lab {

struct CareOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  // Frobenius norm of the Riccati residual
};

struct CareSolution {
  Eigen::MatrixXd S;  // stabilizing solution
  Eigen::MatrixXd K;  // R^-1 B^T S
  double residual = 0.0;
  int iterations = 0;
};

/// ||S A + A^T S - S B R^-1 B^T S + Q||_F
double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& S);

/**
 * Solves A^T X + X A + Q = 0 through the Kronecker-product linear system. Intended for
 * small state dimensions. Throws NumericalError when A has eigenvalue pairs summing to 0.
 */
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/**
 * Stabilizing CARE solution from the stable eigenvectors of the Hamiltonian
 * [A, -B R^-1 B^T; -Q, -A^T]. No refinement.
 */
Eigen::MatrixXd care_hamiltonian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/**
 * Continuous-time algebraic Riccati equation
 *
 *   S A + A^T S - S B R^-1 B^T S + Q = 0
 *
 * solved by Newton-Kleinman iteration seeded with the Hamiltonian-eigenvector solution.
 * Preconditions: (A, B) controllable, Q symmetric PSD, R symmetric positive definite;
 * violations throw InvalidArgument. Throws NumericalError (carrying the last residual)
 * when the iteration budget runs out without meeting the tolerance.
 */
CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        const CareOptions& options = {});

}  // namespace pendulum_lab
