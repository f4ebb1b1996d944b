#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ebm/posterior.hpp"
#include "ebm/rng.hpp"
#include "ebm/sufficient_stats.hpp"

namespace ebm {

enum class PolicyKind { ebm_ts, ebm_ucb, lin_ts, lin_ucb, ols_greedy, oracle };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::ebm_ucb;
  double a = 0.1;          ///< exploration multiplier in a*sqrt(log t)
  double lambda = 0.001;   ///< ridge precision
  int min_pulls_per_arm = 1;

  void validate() const;
};

/// One arm-selection outcome with the per-arm diagnostics behind it.
struct Decision {
  int arm = 0;
  Eigen::VectorXd scores;
  Eigen::VectorXd mu;
  Eigen::VectorXd tau;
  bool forced = false;
};

/// Exploration schedule a*sqrt(log t); zero at t = 1.
double exploration_scale(std::int64_t t, double a);

/// Optimistic scoring: mu + alpha * tau per arm, argmax with lowest-index
/// tie-break.
Decision select_ebm_ucb(const std::vector<GaussianPosterior>& posteriors,
                        const Eigen::VectorXd& x, double alpha);

/// Posterior sampling with covariance inflated by alpha^2; draws are taken
/// arm by arm in index order so equal seeds give equal decisions.
Decision select_ebm_ts(const std::vector<GaussianPosterior>& posteriors,
                       const Eigen::VectorXd& x, double alpha, Rng& rng);

/// Independent-learning baselines on per-instance ridge statistics only.
Decision select_baseline(PolicyKind kind,
                         const std::vector<SufficientStats>& per_arm_stats,
                         const Eigen::VectorXd& x, double alpha, double lambda,
                         Rng& rng);

/// Round-robin initialization: the lowest-index arm still short of its
/// per-instance quota, or nothing once all arms are covered.
std::optional<int> forced_initialization(std::int64_t t_instance, int n_arms,
                                         int min_pulls,
                                         const std::vector<std::int64_t>& pull_counts);

}  // namespace ebm
