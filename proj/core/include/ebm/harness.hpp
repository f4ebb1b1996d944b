#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "ebm/environment.hpp"
#include "ebm/posterior.hpp"
#include "ebm/run_config.hpp"

namespace ebm {

struct StepRecord {
  std::int64_t t = 0;
  int instance = 0;
  int arm = 0;
  int optimal_arm = 0;
  double regret = 0.0;
};

/// Per-step regret record of one episode plus running sums. In weighted
/// mode `regret` is the arrival-probability-weighted counterfactual regret
/// over all instances and the per-instance sums carry each instance's
/// weighted share; either way the per-instance sums partition the total.
struct RegretTrace {
  std::vector<StepRecord> steps;
  std::vector<double> cumulative;
  /// horizon x n_instances: running per-instance cumulative regret.
  Eigen::MatrixXd per_instance_cumulative;
  /// Largest context norm seen; input to the regret-bound diagnostic.
  double max_context_norm = 0.0;

  std::vector<std::int64_t> arrival_counts(int n_instances) const;
};

/// Resolves the configured environment for one replication seed:
/// generator-sourced environments are redrawn deterministically from the
/// seed, file-sourced ones are loaded as-is.
EnvTruth resolve_env(const EnvSource& source, std::uint64_t seed);

/// Plays one episode under the realized-regret accounting.
RegretTrace run_episode(const EnvTruth& env, const RunConfig& config,
                        std::uint64_t seed);

/// Plays one episode scoring every instance's would-be decision on the
/// shared context and weighting by arrival probability; only the realized
/// instance's statistics are updated.
RegretTrace weighted_regret_trace(const EnvTruth& env, const RunConfig& config,
                                  std::uint64_t seed);

struct CurveStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd q10;
  Eigen::VectorXd q50;
  Eigen::VectorXd q90;
};

struct AggregateResult {
  CurveStats total;
  std::vector<CurveStats> per_instance;
};

struct ReplicationResult {
  std::vector<RegretTrace> traces;  ///< ordered as config.seeds
  AggregateResult aggregate;
  int n_instances = 0;
};

/// Runs every seed (concurrently up to config.jobs) and reduces the
/// cumulative-regret curves to mean/sd/quantiles. Results do not depend on
/// scheduling order.
ReplicationResult run_replications(const RunConfig& config);

AggregateResult aggregate_traces(const std::vector<RegretTrace>& traces,
                                 int n_instances);

/// Inputs of the cumulative-regret upper bound diagnostic.
struct BoundParams {
  double noise_sd = 1.0;    ///< common reward-noise sd
  double ridge = 0.001;     ///< prior precision on the shared coefficients
  double prec_max = 1.0;    ///< largest eigenvalue of any prior precision
  double prec_min = 1.0;    ///< smallest eigenvalue of any prior precision
  double x_max = 1.0;       ///< context norm bound
  double coeff_max = 1.0;   ///< coefficient norm bound
  int dim = 1;
  int n_arms = 1;
  int n_instances = 1;
  std::vector<double> per_instance_steps;  ///< realized n_j
  double horizon = 1.0;
  double delta = 0.05;
};

/// High-probability exploration radius at the given confidence level.
double bound_exploration_radius(const BoundParams& p);

/// Closed-form cumulative-regret upper bound for the optimistic policy;
/// monotone nondecreasing in horizon and in the number of instances.
double theoretical_bound_ucb(const BoundParams& p);

/// Exact joint-Gaussian reference posterior for one arm: stacks the shared
/// coefficient and all instance coefficients into one Gaussian, solves the
/// full precision system once, and reads off the marginals. Test/diagnostic
/// use only; refuses stacked dimension above 200.
struct JointPosterior {
  GaussianPosterior shared;
  std::vector<GaussianPosterior> marginals;
};

JointPosterior oracle_joint_posterior(
    const std::vector<SufficientStats>& stats_by_instance,
    const Eigen::MatrixXd& prior_cov, double noise_var, double ridge);

}  // namespace ebm
