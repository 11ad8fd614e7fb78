#include "arm4/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace arm4 {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr int kMaxPolishSteps = 8;

double scale_of(const Eigen::MatrixXd& M) {
  return std::max(1.0, M.cwiseAbs().maxCoeff());
}

bool is_symmetric(const Eigen::MatrixXd& M) {
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * scale_of(M);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Solves Ac' X + X Ac + C = 0 through the Kronecker form. n is at most a
// few dozen here, so the dense n^2 system is cheap enough.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& C) {
  const Eigen::Index n = Ac.rows();
  const Eigen::MatrixXd At = Ac.transpose();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // I (x) Ac'
    L.block(j * n, j * n, n, n) += At;
    // Ac' (x) I
    for (Eigen::Index i = 0; i < n; ++i) {
      L.block(i * n, j * n, n, n).diagonal().array() += At(i, j);
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  const Eigen::VectorXd x = L.partialPivLu().solve(rhs);
  return symmetrize(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n));
}

// sign(H) by the Newton iteration Z <- (Z/c + c Z^-1) / 2 with determinant
// scaling. Fails if H has (numerically) imaginary-axis eigenvalues.
Eigen::MatrixXd matrix_sign(const Eigen::MatrixXd& H, int max_iterations) {
  const double dim = static_cast<double>(H.rows());
  Eigen::MatrixXd Z = H;
  bool scaling = true;
  double previous_change = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal();
    if ((pivots.array() == 0.0).any() || !pivots.allFinite()) {
      throw NotStabilizable("Hamiltonian has eigenvalues on the imaginary axis");
    }
    double c = 1.0;
    if (scaling) {
      const double log_det = pivots.array().abs().log().sum();
      c = std::exp(log_det / dim);
    }
    const Eigen::MatrixXd next = 0.5 * (Z / c + c * lu.inverse());
    if (!next.allFinite()) {
      throw NotStabilizable("matrix sign iteration diverged");
    }
    const double change = (next - Z).lpNorm<1>() / std::max(1.0, Z.lpNorm<1>());
    Z = next;
    if (change < 1e-2) scaling = false;
    if (change <= 1e-14) return Z;
    // Once in the quadratic regime, stagnation means rounding has taken over.
    if (change < 1e-9 && change >= previous_change) return Z;
    previous_change = change;
  }
  throw NotStabilizable("matrix sign iteration exceeded " + std::to_string(max_iterations) +
                        " iterations");
}

void check_dimensions(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const CostWeights& w) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || w.Q().rows() != n || w.R().rows() != B.cols() ||
      B.cols() == 0 || n == 0) {
    throw InvalidArgument("inconsistent dimensions for the Riccati equation");
  }
  if (!A.allFinite() || !B.allFinite()) {
    throw InvalidArgument("system matrices must be finite");
  }
}

}  // namespace

CostWeights::CostWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R) {
  if (Q.rows() != Q.cols() || R.rows() != R.cols() || R.rows() == 0) {
    throw InvalidArgument("cost weights must be square");
  }
  if (!Q.allFinite() || !R.allFinite()) throw InvalidArgument("cost weights must be finite");
  if (!is_symmetric(Q) || !is_symmetric(R)) {
    throw InvalidArgument("cost weights must be symmetric");
  }
  Q_ = symmetrize(Q);
  R_ = symmetrize(R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r_eig(R_, Eigen::EigenvaluesOnly);
  if (!(r_eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidArgument("R must be positive definite");
  }
  if (Q_.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(Q_, Eigen::EigenvaluesOnly);
    if (q_eig.eigenvalues().minCoeff() < -kSymmetryTolerance * scale_of(Q_)) {
      throw InvalidArgument("Q must be positive semidefinite");
    }
  }
}

Eigen::MatrixXd care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const CostWeights& w, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd RinvBtP = w.R().llt().solve(B.transpose() * P);
  return A.transpose() * P + P * A - P * B * RinvBtP + w.Q();
}

double spectral_abscissa(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(M, false);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  return eig.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const CostWeights& w, const CareOptions& options) {
  check_dimensions(A, B, w);
  const Eigen::Index n = A.rows();
  const Eigen::LLT<Eigen::MatrixXd> r_llt(w.R());
  const Eigen::MatrixXd G = B * r_llt.solve(B.transpose());

  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -G, -w.Q(), -A.transpose();
  const Eigen::MatrixXd S = matrix_sign(H, options.max_iterations);

  // The stable subspace is range [I; P], so (S + I) [I; P] = 0.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << S.topRightCorner(n, n), S.bottomRightCorner(n, n) + I;
  rhs << S.topLeftCorner(n, n) + I, S.bottomLeftCorner(n, n);
  Eigen::MatrixXd P = symmetrize(lhs.colPivHouseholderQr().solve(-rhs));
  if (!P.allFinite()) throw NotStabilizable("no stabilizing solution");

  const double budget = options.residual_tolerance * std::max(1.0, w.Q().norm());
  double residual = care_residual(A, B, w, P).norm();
  for (int step = 0; step < kMaxPolishSteps && residual > 1e-3 * budget; ++step) {
    const Eigen::MatrixXd K = r_llt.solve(B.transpose() * P);
    const Eigen::MatrixXd Ac = A - B * K;
    if (!(spectral_abscissa(Ac) < 0.0)) break;
    const Eigen::MatrixXd candidate =
        solve_lyapunov(Ac, w.Q() + K.transpose() * w.R() * K);
    const double candidate_residual = care_residual(A, B, w, candidate).norm();
    if (!candidate.allFinite() || !(candidate_residual < residual)) break;
    P = candidate;
    residual = candidate_residual;
  }

  const Eigen::MatrixXd K = r_llt.solve(B.transpose() * P);
  if (!(spectral_abscissa(A - B * K) < 0.0)) {
    throw NotStabilizable("Riccati solution does not stabilize A - BK");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_eig(P, Eigen::EigenvaluesOnly);
  if (p_eig.eigenvalues().minCoeff() < -1e-8 * scale_of(P)) {
    throw NotStabilizable("Riccati solution is not positive semidefinite");
  }
  if (!(residual <= budget)) {
    throw IllConditioned("Riccati residual " + std::to_string(residual) +
                         " exceeds tolerance " + std::to_string(budget));
  }
  return P;
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const CostWeights& w, const CareOptions& options) {
  const Eigen::MatrixXd P = solve_care(A, B, w, options);
  return w.R().llt().solve(B.transpose() * P);
}

}  // namespace arm4
