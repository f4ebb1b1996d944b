#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ebm/posterior.hpp"
#include "ebm/sufficient_stats.hpp"

namespace ebm {

/// Result of threshold_covariance: the sparsified scatter matrix with the
/// threshold that produced it and whether the eigenvalue floor had to act.
struct CovarianceEstimate {
  Eigen::MatrixXd sigma_hat;
  double gamma = 0.0;
  int n_contributing = 0;
  bool repaired = false;
};

struct OlsEstimate {
  enum class Status { unavailable, ridge, ols };
  Status status = Status::unavailable;
  Eigen::VectorXd beta;

  bool available() const { return status != Status::unavailable; }
  bool exact() const { return status == Status::ols; }
};

/// Per-instance least squares. Exact OLS requires count >= d and a Gram
/// condition number below 1e10; with less data the ridge-regularized solve
/// is returned instead, and an empty instance yields `unavailable`.
OlsEstimate ols_estimate(const SufficientStats& stats, double ridge_fallback);

/// Pooled residual noise-variance estimate across instances, from the
/// accumulators alone: ||y - X b||^2 = yty - 2 b.xty + b.gram.b per
/// instance, divided by max(total count - d - 1, 1). Floored at 1e-6.
double estimate_noise_variance(
    const std::vector<SufficientStats>& stats_by_instance,
    const std::vector<Eigen::VectorXd>& beta_hat_by_instance, int dim);

/// Unbiased sample covariance of the coefficient estimates (divides the
/// centered scatter by N'-1). Needs at least two contributors.
std::optional<Eigen::MatrixXd> sample_covariance(
    const std::vector<Eigen::VectorXd>& estimates);

/// Hard-thresholds entries of S below gamma in magnitude, then raises any
/// eigenvalue below `eig_floor` to the floor so the result stays usable as
/// a prior covariance (its inverse enters every posterior).
CovarianceEstimate threshold_covariance(const Eigen::MatrixXd& S, double gamma,
                                        double eig_floor);

/// Threshold selection at the standard sparse-covariance rate:
/// gamma = c * max_diag(S) * sqrt(log(d) / N').
double select_threshold(const Eigen::MatrixXd& S, int n_contributing,
                        double c_gamma);

inline constexpr double kDefaultEigFloor = 1e-4;
inline constexpr double kNoiseVarFloor = 1e-6;
inline constexpr double kDefaultThresholdScale = 0.5;

/// Stateful per-arm estimator of the prior hyperparameters.
///
/// Holds unit defaults (identity covariance, unit noise) until the arm has
/// at least two instances with exact OLS fits and d+1 total pulls; after
/// that, each refresh recomputes the thresholded covariance and the pooled
/// noise variance. The caller owns the cadence (refresh on pull).
class PriorEstimator {
 public:
  explicit PriorEstimator(int dim);

  /// Re-estimates from the current accumulators and posterior means.
  /// Returns true if the estimate changed (i.e. the cold-start gate is open).
  bool refresh(const std::vector<SufficientStats>& stats_by_instance,
               const std::vector<Eigen::VectorXd>& beta_hat_by_instance);

  const CovarianceEstimate& covariance() const { return cov_; }
  double noise_var() const { return noise_var_; }
  bool cold_start() const { return cold_start_; }

  ArmPriorState make_prior(double ridge) const;

 private:
  int dim_;
  CovarianceEstimate cov_;
  double noise_var_ = 1.0;
  bool cold_start_ = true;
};

}  // namespace ebm
