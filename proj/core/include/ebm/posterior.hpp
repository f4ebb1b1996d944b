#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "ebm/sufficient_stats.hpp"

namespace ebm {

/// Mean and covariance of a Gaussian belief over a coefficient vector.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Prior hyperparameters for one arm: reward-noise variance, the covariance
/// of instance coefficients around the shared arm-level mean (with its
/// cached inverse), and the ridge precision on the shared mean itself.
class ArmPriorState {
 public:
  /// Validates positivity/symmetry and caches the inverse of `prior_cov`.
  ArmPriorState(Eigen::MatrixXd prior_cov, double noise_var, double ridge);

  const Eigen::MatrixXd& prior_cov() const { return prior_cov_; }
  const Eigen::MatrixXd& prior_prec() const { return prior_prec_; }
  double noise_var() const { return noise_var_; }
  double ridge() const { return ridge_; }
  int dim() const { return static_cast<int>(prior_cov_.rows()); }

 private:
  Eigen::MatrixXd prior_cov_;
  Eigen::MatrixXd prior_prec_;
  double noise_var_;
  double ridge_;
};

/// Posterior of an instance coefficient conditioned on the shared mean:
/// mean is linear in `shared_mean`, covariance shrinks with data.
GaussianPosterior conditional_posterior(const SufficientStats& stats,
                                        const ArmPriorState& prior,
                                        const Eigen::VectorXd& shared_mean);

/// One instance's contribution to the shared-mean posterior, reduced to
/// d-by-d algebra: the pair (X^T V^-1 X, X^T V^-1 y) where V is the
/// marginal reward covariance of the instance's observations.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> weighted_gram(
    const SufficientStats& stats, const ArmPriorState& prior);

/// Posterior of the shared arm-level mean given each instance's weighted
/// gram pair and the ridge precision.
GaussianPosterior shared_posterior(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& grams,
    double ridge);

/// Posterior of an instance coefficient with the shared mean integrated
/// out; the covariance adds the shared-mean uncertainty term.
GaussianPosterior marginal_posterior(const SufficientStats& stats,
                                     const ArmPriorState& prior,
                                     const GaussianPosterior& shared);

/// Predicted reward and its uncertainty for a context.
/// tau2 is clamped at zero against symmetrization round-off; a materially
/// negative quadratic form raises NumericalError.
std::pair<double, double> predict(const GaussianPosterior& posterior,
                                  const Eigen::VectorXd& x);

/// Per-arm posterior state over all instances.
///
/// Caches each instance's weighted gram pair and the shared posterior;
/// an update touches only the changed instance before the shared state is
/// recomputed, so a step costs O(N d^2 + d^3) rather than O(N T d^2).
/// Marginal posteriors are formed on demand at decision time.
///
/// Single-writer per arm: the decision read and the reward write for one
/// time step are sequential by contract. Distinct arms may live on
/// different threads.
class PosteriorEngine {
 public:
  PosteriorEngine(int n_instances, ArmPriorState prior);

  /// Replaces the prior (empirical-Bayes refresh) and rebuilds all caches.
  void set_prior(ArmPriorState prior);

  /// Folds an observation into one instance and refreshes its cached
  /// contribution plus the shared posterior.
  void update(int instance, const Eigen::VectorXd& x, double y);

  const ArmPriorState& prior() const { return prior_; }
  const SufficientStats& stats(int instance) const {
    return stats_[static_cast<std::size_t>(instance)];
  }
  const std::vector<SufficientStats>& all_stats() const { return stats_; }
  const GaussianPosterior& shared() const { return shared_; }
  GaussianPosterior marginal(int instance) const;

  int n_instances() const { return static_cast<int>(stats_.size()); }
  std::int64_t total_count() const;

 private:
  void refresh_instance(int instance);
  void refresh_shared();

  ArmPriorState prior_;
  std::vector<SufficientStats> stats_;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> gram_cache_;
  GaussianPosterior shared_;
};

}  // namespace ebm
