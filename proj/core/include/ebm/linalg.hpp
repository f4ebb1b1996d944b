#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <stdexcept>
#include <string>

#include "ebm/rng.hpp"

namespace ebm {

/// Raised when a computation violates a numerical invariant (failed
/// factorization, materially negative variance, non-PSD covariance).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdTol = -1e-8;

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// Solves a symmetric positive definite system for a matrix right-hand side.
inline Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& rhs,
                                 const char* context) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError(std::string(context) +
                         ": symmetric factorization failed");
  }
  return ldlt.solve(rhs);
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a,
                                   const char* context) {
  return symmetrize(
      spd_solve(a, Eigen::MatrixXd::Identity(a.rows(), a.cols()), context));
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Symmetric square root L with L L^T = m, tolerating round-off slightly
/// below zero. Rejects matrices that are materially indefinite.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* context) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  if (es.info() != Eigen::Success) {
    throw NumericalError(std::string(context) + ": eigendecomposition failed");
  }
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < kPsdTol) {
    throw NumericalError(std::string(context) +
                         ": matrix is not positive semidefinite (min eig " +
                         std::to_string(ev.minCoeff()) + ")");
  }
  return es.eigenvectors() *
         ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Draws from N(mean, cov) using the symmetric square root of cov.
inline Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& cov, Rng& rng,
                                       const char* context = "sample_gaussian") {
  const Eigen::MatrixXd root = psd_sqrt(cov, context);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + root * z;
}

}  // namespace ebm
