#include "ebm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>

#include "ebm/empirical_bayes.hpp"
#include "ebm/linalg.hpp"
#include "ebm/policies.hpp"

namespace ebm {

namespace {

// Substream tags for the per-episode rng tree.
enum : std::uint64_t {
  kEnvStream = 1,
  kArrivalStream = 2,
  kContextStream = 3,
  kRewardStream = 4,
  kPolicyStream = 5,
};

bool is_ebm_kind(PolicyKind kind) {
  return kind == PolicyKind::ebm_ts || kind == PolicyKind::ebm_ucb;
}

bool is_baseline_kind(PolicyKind kind) {
  return kind == PolicyKind::lin_ts || kind == PolicyKind::lin_ucb ||
         kind == PolicyKind::ols_greedy;
}

/// Sequential state of one episode: the policy's learner state, pull
/// bookkeeping, and the trace under construction.
class EpisodeRunner {
 public:
  EpisodeRunner(const EnvTruth& env, const RunConfig& config,
                std::uint64_t seed)
      : env_(env),
        config_(config),
        arrival_rng_(Rng(seed).fork(kArrivalStream)),
        context_rng_(Rng(seed).fork(kContextStream)),
        reward_rng_(Rng(seed).fork(kRewardStream)),
        policy_rng_(Rng(seed).fork(kPolicyStream)) {
    config_.validate();
    const int n = env_.n_instances;
    const int k = env_.n_arms;
    pull_counts_.assign(static_cast<std::size_t>(n),
                        std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
    if (is_ebm_kind(config_.policy.kind)) {
      engines_.reserve(static_cast<std::size_t>(k));
      estimators_.reserve(static_cast<std::size_t>(k));
      for (int arm = 0; arm < k; ++arm) {
        engines_.emplace_back(n, initial_prior(arm));
        estimators_.emplace_back(env_.dim);
      }
    } else if (is_baseline_kind(config_.policy.kind)) {
      baseline_stats_.assign(
          static_cast<std::size_t>(n),
          std::vector<SufficientStats>(static_cast<std::size_t>(k),
                                       SufficientStats(env_.dim)));
    }
  }

  RegretTrace run(RegretMode mode) {
    RegretTrace trace;
    const auto horizon = config_.horizon;
    const int n = env_.n_instances;
    trace.steps.reserve(static_cast<std::size_t>(horizon));
    trace.cumulative.reserve(static_cast<std::size_t>(horizon));
    trace.per_instance_cumulative.setZero(horizon, n);

    Eigen::VectorXd instance_sums = Eigen::VectorXd::Zero(n);
    double total = 0.0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      StepOutcome step;
      try {
        step = mode == RegretMode::realized ? realized_step(t)
                                            : weighted_step(t);
      } catch (const NumericalError& e) {
        throw NumericalError("episode aborted at step " + std::to_string(t) +
                             ": " + e.what());
      }
      total += step.record.regret;
      instance_sums += step.instance_contribution;
      trace.steps.push_back(step.record);
      trace.cumulative.push_back(total);
      trace.per_instance_cumulative.row(t - 1) = instance_sums.transpose();
      trace.max_context_norm =
          std::max(trace.max_context_norm, step.context_norm);
    }
    return trace;
  }

 private:
  struct StepOutcome {
    StepRecord record;
    Eigen::VectorXd instance_contribution;
    double context_norm = 0.0;
  };

  ArmPriorState initial_prior(int arm) const {
    const double lambda = config_.policy.lambda;
    if (config_.estimation == EstimationMode::fixed_prior) {
      const double sd = env_.noise_sd[static_cast<std::size_t>(arm)];
      return ArmPriorState(env_.prior_cov[static_cast<std::size_t>(arm)],
                           sd * sd, lambda);
    }
    return ArmPriorState(Eigen::MatrixXd::Identity(env_.dim, env_.dim), 1.0,
                         lambda);
  }

  int optimal_arm(int instance, const Eigen::VectorXd& x) const {
    const auto& arms = env_.coeffs[static_cast<std::size_t>(instance)];
    int best = 0;
    double best_value = x.dot(arms[0]);
    for (int k = 1; k < env_.n_arms; ++k) {
      const double value = x.dot(arms[static_cast<std::size_t>(k)]);
      if (value > best_value) {
        best_value = value;
        best = k;
      }
    }
    return best;
  }

  Decision decide(int instance, const Eigen::VectorXd& x, std::int64_t t) {
    const auto& counts = pull_counts_[static_cast<std::size_t>(instance)];
    if (config_.policy.kind != PolicyKind::oracle) {
      std::int64_t seen = 0;
      for (const auto c : counts) seen += c;
      if (const auto forced = forced_initialization(
              seen + 1, env_.n_arms, config_.policy.min_pulls_per_arm, counts)) {
        Decision d;
        d.arm = *forced;
        d.forced = true;
        d.scores = Eigen::VectorXd::Zero(env_.n_arms);
        d.mu = Eigen::VectorXd::Zero(env_.n_arms);
        d.tau = Eigen::VectorXd::Zero(env_.n_arms);
        return d;
      }
    }
    const double alpha = exploration_scale(t, config_.policy.a);
    switch (config_.policy.kind) {
      case PolicyKind::oracle: {
        Decision d;
        d.scores.resize(env_.n_arms);
        for (int k = 0; k < env_.n_arms; ++k) {
          d.scores[k] = x.dot(env_.coeffs[static_cast<std::size_t>(instance)]
                                         [static_cast<std::size_t>(k)]);
        }
        d.mu = d.scores;
        d.tau = Eigen::VectorXd::Zero(env_.n_arms);
        d.arm = optimal_arm(instance, x);
        return d;
      }
      case PolicyKind::ebm_ts:
      case PolicyKind::ebm_ucb: {
        std::vector<GaussianPosterior> posteriors;
        posteriors.reserve(static_cast<std::size_t>(env_.n_arms));
        for (auto& engine : engines_) {
          posteriors.push_back(engine.marginal(instance));
        }
        return config_.policy.kind == PolicyKind::ebm_ucb
                   ? select_ebm_ucb(posteriors, x, alpha)
                   : select_ebm_ts(posteriors, x, alpha, policy_rng_);
      }
      default:
        return select_baseline(
            config_.policy.kind,
            baseline_stats_[static_cast<std::size_t>(instance)], x, alpha,
            config_.policy.lambda, policy_rng_);
    }
  }

  double instant_regret(int instance, int arm, const Eigen::VectorXd& x) const {
    const auto& arms = env_.coeffs[static_cast<std::size_t>(instance)];
    return x.dot(arms[static_cast<std::size_t>(optimal_arm(instance, x))]) -
           x.dot(arms[static_cast<std::size_t>(arm)]);
  }

  void apply_update(int instance, int arm, const Eigen::VectorXd& x,
                    double reward) {
    if (is_ebm_kind(config_.policy.kind)) {
      auto& engine = engines_[static_cast<std::size_t>(arm)];
      engine.update(instance, x, reward);
      if (config_.estimation == EstimationMode::empirical_bayes) {
        refresh_prior(arm);
      }
    } else if (is_baseline_kind(config_.policy.kind)) {
      auto& s = baseline_stats_[static_cast<std::size_t>(instance)]
                               [static_cast<std::size_t>(arm)];
      s = update_stats(s, x, reward);
    }
    pull_counts_[static_cast<std::size_t>(instance)]
                [static_cast<std::size_t>(arm)] += 1;
  }

  void refresh_prior(int arm) {
    auto& engine = engines_[static_cast<std::size_t>(arm)];
    std::vector<Eigen::VectorXd> means;
    means.reserve(static_cast<std::size_t>(env_.n_instances));
    for (int j = 0; j < env_.n_instances; ++j) {
      means.push_back(engine.marginal(j).mean);
    }
    auto& estimator = estimators_[static_cast<std::size_t>(arm)];
    if (estimator.refresh(engine.all_stats(), means)) {
      engine.set_prior(estimator.make_prior(config_.policy.lambda));
    }
  }

  StepOutcome realized_step(std::int64_t t) {
    const int instance = sample_arrival(env_.arrival, arrival_rng_);
    const Eigen::VectorXd x = sample_context(env_.context, env_.dim, context_rng_);
    const Decision decision = decide(instance, x, t);
    StepOutcome out;
    out.context_norm = x.norm();
    out.record = {t, instance, decision.arm, optimal_arm(instance, x),
                  instant_regret(instance, decision.arm, x)};
    out.instance_contribution = Eigen::VectorXd::Zero(env_.n_instances);
    out.instance_contribution[instance] = out.record.regret;
    finish_step(instance, decision.arm, x);
    return out;
  }

  StepOutcome weighted_step(std::int64_t t) {
    const int instance = sample_arrival(env_.arrival, arrival_rng_);
    const Eigen::VectorXd x = sample_context(env_.context, env_.dim, context_rng_);
    StepOutcome out;
    out.context_norm = x.norm();
    out.instance_contribution = Eigen::VectorXd::Zero(env_.n_instances);
    int realized_arm = 0;
    double weighted = 0.0;
    for (int j = 0; j < env_.n_instances; ++j) {
      const Decision d = decide(j, x, t);
      const double r = instant_regret(j, d.arm, x);
      out.instance_contribution[j] = env_.arrival[j] * r;
      weighted += env_.arrival[j] * r;
      if (j == instance) realized_arm = d.arm;
    }
    out.record = {t, instance, realized_arm, optimal_arm(instance, x), weighted};
    finish_step(instance, realized_arm, x);
    return out;
  }

  void finish_step(int instance, int arm, const Eigen::VectorXd& x) {
    const double reward = sample_reward(env_, instance, arm, x, reward_rng_);
    apply_update(instance, arm, x, reward);
  }

  const EnvTruth& env_;
  RunConfig config_;
  Rng arrival_rng_;
  Rng context_rng_;
  Rng reward_rng_;
  Rng policy_rng_;
  std::vector<PosteriorEngine> engines_;          // ebm kinds
  std::vector<PriorEstimator> estimators_;        // ebm kinds under EB
  std::vector<std::vector<SufficientStats>> baseline_stats_;  // [instance][arm]
  std::vector<std::vector<std::int64_t>> pull_counts_;        // [instance][arm]
};

}  // namespace

std::vector<std::int64_t> RegretTrace::arrival_counts(int n_instances) const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_instances), 0);
  for (const auto& s : steps) {
    counts[static_cast<std::size_t>(s.instance)] += 1;
  }
  return counts;
}

EnvTruth resolve_env(const EnvSource& source, std::uint64_t seed) {
  if (source.file) return load_env(*source.file);
  const GeneratorSpec& g = *source.generator;
  Rng rng = Rng(seed).fork(kEnvStream);
  EnvTruth env =
      g.mode == GeneratorSpec::Mode::hierarchical
          ? generate_hierarchical_env(g.n_instances, g.n_arms, g.dim,
                                      g.arrival, rng)
          : generate_sparse_env(g.n_instances, g.n_arms, g.dim,
                                g.sparse_support, g.delta_scale, g.arrival,
                                rng);
  env.context = g.context;
  return env;
}

RegretTrace run_episode(const EnvTruth& env, const RunConfig& config,
                        std::uint64_t seed) {
  return EpisodeRunner(env, config, seed).run(RegretMode::realized);
}

RegretTrace weighted_regret_trace(const EnvTruth& env, const RunConfig& config,
                                  std::uint64_t seed) {
  return EpisodeRunner(env, config, seed).run(RegretMode::weighted);
}

namespace {

Eigen::VectorXd curve_quantile(const std::vector<Eigen::VectorXd>& columns,
                               double p) {
  // columns[s] is seed s's curve; quantile taken per time step with linear
  // interpolation between order statistics.
  const auto horizon = columns.front().size();
  const auto n = static_cast<std::ptrdiff_t>(columns.size());
  Eigen::VectorXd out(horizon);
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < horizon; ++t) {
    for (std::ptrdiff_t s = 0; s < n; ++s) {
      values[static_cast<std::size_t>(s)] = columns[static_cast<std::size_t>(s)][t];
    }
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, static_cast<std::size_t>(n - 1));
    const double frac = pos - static_cast<double>(lo);
    out[t] = values[lo] + frac * (values[hi] - values[lo]);
  }
  return out;
}

CurveStats reduce_curves(std::vector<Eigen::VectorXd> curves) {
  const auto horizon = curves.front().size();
  const auto n = static_cast<double>(curves.size());
  CurveStats stats;
  stats.mean = Eigen::VectorXd::Zero(horizon);
  for (const auto& c : curves) stats.mean += c;
  stats.mean /= n;
  stats.sd = Eigen::VectorXd::Zero(horizon);
  if (curves.size() > 1) {
    for (const auto& c : curves) {
      stats.sd += (c - stats.mean).cwiseAbs2();
    }
    stats.sd = (stats.sd / (n - 1.0)).cwiseSqrt();
  }
  stats.q10 = curve_quantile(curves, 0.10);
  stats.q50 = curve_quantile(curves, 0.50);
  stats.q90 = curve_quantile(curves, 0.90);
  return stats;
}

}  // namespace

AggregateResult aggregate_traces(const std::vector<RegretTrace>& traces,
                                 int n_instances) {
  if (traces.empty()) {
    throw std::invalid_argument("aggregate_traces: no traces");
  }
  AggregateResult out;
  std::vector<Eigen::VectorXd> totals;
  totals.reserve(traces.size());
  for (const auto& tr : traces) {
    totals.push_back(Eigen::Map<const Eigen::VectorXd>(
        tr.cumulative.data(), static_cast<Eigen::Index>(tr.cumulative.size())));
  }
  out.total = reduce_curves(std::move(totals));
  out.per_instance.reserve(static_cast<std::size_t>(n_instances));
  for (int j = 0; j < n_instances; ++j) {
    std::vector<Eigen::VectorXd> curves;
    curves.reserve(traces.size());
    for (const auto& tr : traces) {
      curves.push_back(tr.per_instance_cumulative.col(j));
    }
    out.per_instance.push_back(reduce_curves(std::move(curves)));
  }
  return out;
}

ReplicationResult run_replications(const RunConfig& config) {
  config.validate();
  ReplicationResult result;
  const std::size_t n_seeds = config.seeds.size();
  result.traces.resize(n_seeds);

  // File-sourced environments are fixed across seeds; load once.
  std::optional<EnvTruth> fixed_env;
  if (config.env.file) fixed_env = load_env(*config.env.file);
  result.n_instances = fixed_env
                           ? fixed_env->n_instances
                           : config.env.generator->n_instances;

  const auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    try {
      const EnvTruth env =
          fixed_env ? *fixed_env : resolve_env(config.env, seed);
      EpisodeRunner runner(env, config, seed);
      result.traces[i] = runner.run(config.regret_mode);
    } catch (const std::exception& e) {
      throw std::runtime_error("seed " + std::to_string(seed) + ": " +
                               e.what());
    }
  };

  const int jobs = std::max(
      1, std::min<int>(config.jobs, static_cast<int>(n_seeds)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n_seeds; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < n_seeds;
             i = next.fetch_add(1)) {
          run_one(i);
        }
      }));
    }
    for (auto& f : workers) f.get();  // rethrows the first failure
  }

  result.aggregate = aggregate_traces(result.traces, result.n_instances);
  return result;
}

double bound_exploration_radius(const BoundParams& p) {
  const double s2 = p.noise_sd * p.noise_sd;
  const double log_arg =
      (std::max(p.ridge, s2 * p.prec_max) +
       p.horizon * p.x_max * p.x_max / p.dim) /
      (std::sqrt(p.ridge * p.prec_min * s2) * p.delta);
  return p.noise_sd * p.n_instances * p.coeff_max * std::sqrt(p.prec_max) +
         2.0 * std::sqrt(s2 * p.dim * std::max(p.prec_max / p.ridge, 1.0) *
                         std::log(log_arg));
}

double theoretical_bound_ucb(const BoundParams& p) {
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    throw std::invalid_argument("theoretical_bound_ucb: delta must be in (0,1)");
  }
  if (p.noise_sd <= 0.0 || p.ridge <= 0.0 || p.prec_max <= 0.0 ||
      p.prec_min <= 0.0 || p.x_max <= 0.0 || p.coeff_max <= 0.0 ||
      p.dim < 1 || p.n_arms < 1 || p.n_instances < 1 || p.horizon < 0.0) {
    throw std::invalid_argument("theoretical_bound_ucb: invalid parameters");
  }
  if (static_cast<int>(p.per_instance_steps.size()) != p.n_instances) {
    throw std::invalid_argument(
        "theoretical_bound_ucb: per_instance_steps size mismatch");
  }
  const double s2 = p.noise_sd * p.noise_sd;
  const double x2 = p.x_max * p.x_max;
  const double c1 = (x2 / p.prec_min) / std::log1p(x2 / (s2 * p.prec_min));
  const double c2 = x2 / (s2 * p.dim * p.prec_min);
  const double heavy =
      p.prec_max * p.prec_max * x2 / (p.prec_min * p.prec_min * p.ridge);
  const double c3 = heavy * (1.0 + x2 / (s2 * p.prec_min)) /
                    std::log1p(heavy / s2);
  const double c4 = p.prec_max / p.ridge;

  double per_instance_log = 0.0;
  for (const double nj : p.per_instance_steps) {
    if (nj < 0.0) {
      throw std::invalid_argument(
          "theoretical_bound_ucb: per-instance steps must be >= 0");
    }
    per_instance_log += std::log1p(c2 * nj);
  }
  const double ndk = p.horizon * p.dim * p.n_arms;
  const double inside = c1 * ndk * per_instance_log +
                        c3 * ndk * std::log1p(c4 * p.n_instances);
  return 2.0 * bound_exploration_radius(p) * std::sqrt(inside) +
         2.0 * p.x_max * p.coeff_max * p.n_arms * p.n_instances * p.horizon *
             p.delta;
}

JointPosterior oracle_joint_posterior(
    const std::vector<SufficientStats>& stats_by_instance,
    const Eigen::MatrixXd& prior_cov, double noise_var, double ridge) {
  const int n = static_cast<int>(stats_by_instance.size());
  const int d = static_cast<int>(prior_cov.rows());
  const int stacked = d * (n + 1);
  if (stacked > 200) {
    throw std::invalid_argument(
        "oracle_joint_posterior: stacked dimension exceeds the test-scale "
        "guard of 200");
  }
  const Eigen::MatrixXd prior_prec = spd_inverse(prior_cov, "oracle prior");

  // Stacked order: shared coefficient block first, then each instance.
  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(stacked, stacked);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked);
  prec.topLeftCorner(d, d) =
      ridge * Eigen::MatrixXd::Identity(d, d) + n * prior_prec;
  for (int j = 0; j < n; ++j) {
    const int off = d * (j + 1);
    const auto& s = stats_by_instance[static_cast<std::size_t>(j)];
    prec.block(off, off, d, d) = prior_prec + s.gram / noise_var;
    prec.block(0, off, d, d) = -prior_prec;
    prec.block(off, 0, d, d) = -prior_prec;
    rhs.segment(off, d) = s.xty / noise_var;
  }

  const Eigen::MatrixXd cov = spd_inverse(prec, "oracle joint posterior");
  const Eigen::VectorXd mean = cov * rhs;

  JointPosterior out;
  out.shared.mean = mean.head(d);
  out.shared.cov = symmetrize(cov.topLeftCorner(d, d));
  out.marginals.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int off = d * (j + 1);
    out.marginals.push_back(
        {mean.segment(off, d), symmetrize(cov.block(off, off, d, d))});
  }
  return out;
}

}  // namespace ebm
