#pragma once

#include <Eigen/Dense>

#include "arm4/errors.hpp"

namespace arm4 {

/// LQR weights. Q is symmetric positive semidefinite, R symmetric positive
/// definite; both checked on construction.
class CostWeights {
 public:
  CostWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R);

  static CostWeights diagonal(const Eigen::VectorXd& q, const Eigen::VectorXd& r) {
    return CostWeights(q.asDiagonal().toDenseMatrix(), r.asDiagonal().toDenseMatrix());
  }

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }

 private:
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
};

struct CareOptions {
  int max_iterations = 200;
  // Residual contract: ||A'P + PA - PBR^-1B'P + Q||_F <= tol * max(1, ||Q||_F).
  double residual_tolerance = 1e-8;
};

/// Stabilizing solution of the continuous-time algebraic Riccati equation
///   A'P + PA - P B R^-1 B' P + Q = 0.
///
/// The stable invariant subspace of the Hamiltonian is extracted with a
/// determinant-scaled matrix sign iteration and then polished with
/// Newton-Kleinman steps. Dimensions are arbitrary (n x n, n x m).
///
/// Throws NotStabilizable if the iteration does not converge within the
/// budget or the result does not stabilize A - BK, and IllConditioned if the
/// residual contract cannot be met.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const CostWeights& weights, const CareOptions& options = {});

// K = R^-1 B' P for the stabilizing P.
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const CostWeights& weights, const CareOptions& options = {});

Eigen::MatrixXd care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const CostWeights& weights, const Eigen::MatrixXd& P);

// Largest real part among the eigenvalues of M.
double spectral_abscissa(const Eigen::MatrixXd& M);

}  // namespace arm4
