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

#include "pendulum_lab/care.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "pendulum_lab/errors.hpp"
#include "pendulum_lab/plant.hpp"

namespace pendulum_lab {

namespace {

// Eigenvalues closer to the imaginary axis than this are treated as lying on it.
double axis_margin(const Eigen::MatrixXd& M) { return 1e-9 * std::max(1.0, M.norm()); }

bool is_hurwitz(const Eigen::MatrixXd& M) {
  const Eigen::VectorXcd eig = M.eigenvalues();
  const double margin = axis_margin(M);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (!(eig(i).real() < -margin)) return false;
  }
  return true;
}

void check_inputs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw InvalidArgument("solve_care: inconsistent matrix dimensions");
  }
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite()) {
    throw InvalidArgument("solve_care: non-finite input");
  }
  const double q_scale = std::max(1.0, Q.norm());
  if ((Q - Q.transpose()).norm() > 1e-12 * q_scale) {
    throw InvalidArgument("solve_care: Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(Q, Eigen::EigenvaluesOnly);
  if (q_eig.eigenvalues().minCoeff() < -1e-12 * q_scale) {
    throw InvalidArgument("solve_care: Q must be positive semidefinite");
  }
  if ((R - R.transpose()).norm() > 1e-12 * std::max(1.0, R.norm()) ||
      R.llt().info() != Eigen::Success) {
    throw InvalidArgument("solve_care: R must be symmetric positive definite");
  }
  if (controllability(A, B).rank < n) {
    throw InvalidArgument("solve_care: (A, B) is not controllable");
  }
}

}  // namespace

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& S) {
  const Eigen::MatrixXd BtS = B.transpose() * S;
  const Eigen::MatrixXd res = S * A + A.transpose() * S - BtS.transpose() * R.llt().solve(BtS) + Q;
  return res.norm();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  // vec(A^T X + X A) = (I kron A^T + A^T kron I) vec(X), column-major vec.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = j * n + i;
      for (Eigen::Index k = 0; k < n; ++k) {
        L(row, j * n + k) += A(k, i);  // (A^T X)_{ij} = sum_k A_{ki} X_{kj}
        L(row, k * n + i) += A(k, j);  // (X A)_{ij}   = sum_k X_{ik} A_{kj}
      }
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  if (!lu.isInvertible()) throw NumericalError("solve_lyapunov: singular Lyapunov operator");
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd vec_x = lu.solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(vec_x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd care_hamiltonian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A;
  H.topRightCorner(n, n) = -B * R.llt().solve(B.transpose());
  H.bottomLeftCorner(n, n) = -Q;
  H.bottomRightCorner(n, n) = -A.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> eig(H);
  if (eig.info() != Eigen::Success) throw NumericalError("care_hamiltonian: eigen solve failed");

  Eigen::MatrixXcd stable(2 * n, n);
  Eigen::Index count = 0;
  const double margin = axis_margin(H);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (eig.eigenvalues()(i).real() < -margin) {
      if (count == n) throw NumericalError("care_hamiltonian: too many stable eigenvalues");
      stable.col(count++) = eig.eigenvectors().col(i);
    }
  }
  if (count != n) {
    throw NumericalError("care_hamiltonian: Hamiltonian has eigenvalues on the imaginary axis");
  }
  const Eigen::MatrixXcd U1 = stable.topRows(n);
  const Eigen::MatrixXcd U2 = stable.bottomRows(n);
  // S = U2 U1^-1  <=>  U1^T S^T = U2^T
  const Eigen::MatrixXcd S = U1.transpose().fullPivLu().solve(U2.transpose()).transpose();
  const Eigen::MatrixXd S_real = S.real();
  return 0.5 * (S_real + S_real.transpose());
}

CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        const CareOptions& options) {
  check_inputs(A, B, Q, R);
  const auto R_llt = R.llt();
  const double accept = 1e-8 * (1.0 + Q.norm());

  CareSolution sol;
  sol.S = care_hamiltonian(A, B, Q, R);
  sol.K = R_llt.solve(B.transpose() * sol.S);
  sol.residual = care_residual(A, B, Q, R, sol.S);
  if (!is_hurwitz(A - B * sol.K)) {
    throw NumericalError("solve_care: Hamiltonian seed is not stabilizing", sol.residual);
  }

  // Newton-Kleinman: (A - B K)^T S + S (A - B K) + Q + K^T R K = 0, K <- R^-1 B^T S.
  CareSolution best = sol;
  while (sol.residual > options.tolerance && sol.iterations < options.max_iterations) {
    const Eigen::MatrixXd Ak = A - B * sol.K;
    const Eigen::MatrixXd Qk = Q + sol.K.transpose() * R * sol.K;
    sol.S = solve_lyapunov(Ak, Qk);
    sol.K = R_llt.solve(B.transpose() * sol.S);
    sol.residual = care_residual(A, B, Q, R, sol.S);
    ++sol.iterations;
    if (sol.residual < best.residual) {
      best = sol;
    } else if (best.residual <= accept) {
      // Stagnated at rounding level.
      break;
    }
  }
  best.iterations = sol.iterations;
  if (best.residual > options.tolerance && best.residual > accept) {
    throw NumericalError("solve_care: no convergence after " + std::to_string(sol.iterations) +
                             " iterations",
                         best.residual);
  }
  return best;
}

}  // namespace pendulum_lab
