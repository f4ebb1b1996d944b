#include "ebm/empirical_bayes.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ebm/linalg.hpp"

namespace ebm {

namespace {
constexpr double kOlsConditionLimit = 1e10;
}

OlsEstimate ols_estimate(const SufficientStats& stats, double ridge_fallback) {
  if (ridge_fallback < 0.0) {
    throw std::invalid_argument("ols_estimate: ridge fallback must be >= 0");
  }
  OlsEstimate out;
  if (stats.count == 0) return out;

  const int d = stats.dim();
  if (stats.count >= d) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stats.gram,
                                                      Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo < kOlsConditionLimit) {
      out.status = OlsEstimate::Status::ols;
      out.beta = spd_solve(stats.gram, stats.xty, "ols_estimate");
      return out;
    }
  }
  out.status = OlsEstimate::Status::ridge;
  out.beta = spd_solve(
      stats.gram + ridge_fallback * Eigen::MatrixXd::Identity(d, d), stats.xty,
      "ols_estimate (ridge fallback)");
  return out;
}

double estimate_noise_variance(
    const std::vector<SufficientStats>& stats_by_instance,
    const std::vector<Eigen::VectorXd>& beta_hat_by_instance, int dim) {
  if (stats_by_instance.size() != beta_hat_by_instance.size()) {
    throw std::invalid_argument(
        "estimate_noise_variance: misaligned instance sequences");
  }
  double rss = 0.0;
  std::int64_t total = 0;
  for (std::size_t j = 0; j < stats_by_instance.size(); ++j) {
    const auto& s = stats_by_instance[j];
    if (s.count == 0) continue;
    const auto& b = beta_hat_by_instance[j];
    // Residual sum from the accumulators; round-off can push an exact fit
    // a hair below zero.
    rss += std::max(0.0, s.yty - 2.0 * b.dot(s.xty) + b.dot(s.gram * b));
    total += s.count;
  }
  const double denom =
      std::max<double>(static_cast<double>(total - dim - 1), 1.0);
  return std::max(rss / denom, kNoiseVarFloor);
}

std::optional<Eigen::MatrixXd> sample_covariance(
    const std::vector<Eigen::VectorXd>& estimates) {
  const auto n = static_cast<Eigen::Index>(estimates.size());
  if (n < 2) return std::nullopt;
  const Eigen::Index d = estimates.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& b : estimates) mean += b;
  mean /= static_cast<double>(n);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (const auto& b : estimates) {
    const Eigen::VectorXd c = b - mean;
    scatter.noalias() += c * c.transpose();
  }
  return symmetrize(scatter / static_cast<double>(n - 1));
}

CovarianceEstimate threshold_covariance(const Eigen::MatrixXd& S, double gamma,
                                        double eig_floor) {
  if (gamma < 0.0) {
    throw std::invalid_argument("threshold_covariance: gamma must be >= 0");
  }
  if (eig_floor <= 0.0) {
    throw std::invalid_argument("threshold_covariance: eig_floor must be > 0");
  }
  CovarianceEstimate out;
  out.gamma = gamma;
  out.sigma_hat =
      symmetrize(S.unaryExpr([gamma](double s) {
        return std::abs(s) >= gamma ? s : 0.0;
      }));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.sigma_hat);
  if (es.info() != Eigen::Success) {
    throw NumericalError("threshold_covariance: eigendecomposition failed");
  }
  if (es.eigenvalues().minCoeff() < eig_floor) {
    out.repaired = true;
    out.sigma_hat = symmetrize(
        es.eigenvectors() *
        es.eigenvalues().cwiseMax(eig_floor).asDiagonal() *
        es.eigenvectors().transpose());
  }
  return out;
}

double select_threshold(const Eigen::MatrixXd& S, int n_contributing,
                        double c_gamma) {
  if (n_contributing < 2) {
    throw std::invalid_argument("select_threshold: need at least 2 instances");
  }
  const double d = static_cast<double>(S.rows());
  return c_gamma * S.diagonal().maxCoeff() *
         std::sqrt(std::log(d) / static_cast<double>(n_contributing));
}

PriorEstimator::PriorEstimator(int dim) : dim_(dim) {
  cov_.sigma_hat = Eigen::MatrixXd::Identity(dim, dim);
}

bool PriorEstimator::refresh(
    const std::vector<SufficientStats>& stats_by_instance,
    const std::vector<Eigen::VectorXd>& beta_hat_by_instance) {
  std::vector<Eigen::VectorXd> exact;
  std::int64_t total = 0;
  for (const auto& s : stats_by_instance) {
    total += s.count;
    const OlsEstimate ols = ols_estimate(s, 1e-3);
    if (ols.exact()) exact.push_back(ols.beta);
  }
  if (exact.size() < 2 || total < dim_ + 1) {
    return false;  // cold start: keep unit defaults
  }
  cold_start_ = false;

  const auto scatter = sample_covariance(exact);
  const double gamma = select_threshold(*scatter,
                                        static_cast<int>(exact.size()),
                                        kDefaultThresholdScale);
  cov_ = threshold_covariance(*scatter, gamma, kDefaultEigFloor);
  cov_.n_contributing = static_cast<int>(exact.size());
  noise_var_ =
      estimate_noise_variance(stats_by_instance, beta_hat_by_instance, dim_);
  return true;
}

ArmPriorState PriorEstimator::make_prior(double ridge) const {
  return ArmPriorState(cov_.sigma_hat, noise_var_, ridge);
}

}  // namespace ebm
