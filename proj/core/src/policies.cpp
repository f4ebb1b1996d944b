#include "ebm/policies.hpp"

#include <cmath>
#include <stdexcept>

#include "ebm/linalg.hpp"

namespace ebm {

namespace {

int argmax_lowest_index(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::ebm_ts: return "ebmTS";
    case PolicyKind::ebm_ucb: return "ebmUCB";
    case PolicyKind::lin_ts: return "LinTS";
    case PolicyKind::lin_ucb: return "LinUCB";
    case PolicyKind::ols_greedy: return "ols_greedy";
    case PolicyKind::oracle: return "Oracle";
  }
  throw std::logic_error("unknown policy kind");
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "ebmTS") return PolicyKind::ebm_ts;
  if (name == "ebmUCB") return PolicyKind::ebm_ucb;
  if (name == "LinTS") return PolicyKind::lin_ts;
  if (name == "LinUCB") return PolicyKind::lin_ucb;
  if (name == "ols_greedy" || name == "OLSGreedy") return PolicyKind::ols_greedy;
  if (name == "Oracle" || name == "oracle") return PolicyKind::oracle;
  throw std::invalid_argument("unknown policy kind: " + name);
}

void PolicyConfig::validate() const {
  if (a <= 0.0) throw std::invalid_argument("policy.a must be > 0");
  if (lambda <= 0.0) throw std::invalid_argument("policy.lambda must be > 0");
  if (min_pulls_per_arm < 0) {
    throw std::invalid_argument("policy.min_pulls_per_arm must be >= 0");
  }
}

double exploration_scale(std::int64_t t, double a) {
  if (t < 1) throw std::invalid_argument("exploration_scale: t must be >= 1");
  return a * std::sqrt(std::log(static_cast<double>(t)));
}

Decision select_ebm_ucb(const std::vector<GaussianPosterior>& posteriors,
                        const Eigen::VectorXd& x, double alpha) {
  const int n_arms = static_cast<int>(posteriors.size());
  Decision d;
  d.scores.resize(n_arms);
  d.mu.resize(n_arms);
  d.tau.resize(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    const auto [mu, tau2] = predict(posteriors[static_cast<std::size_t>(k)], x);
    d.mu[k] = mu;
    d.tau[k] = std::sqrt(tau2);
    d.scores[k] = mu + alpha * d.tau[k];
  }
  d.arm = argmax_lowest_index(d.scores);
  return d;
}

Decision select_ebm_ts(const std::vector<GaussianPosterior>& posteriors,
                       const Eigen::VectorXd& x, double alpha, Rng& rng) {
  if (alpha < 0.0) throw std::invalid_argument("select_ebm_ts: alpha < 0");
  const int n_arms = static_cast<int>(posteriors.size());
  Decision d;
  d.scores.resize(n_arms);
  d.mu.resize(n_arms);
  d.tau.resize(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    const auto& post = posteriors[static_cast<std::size_t>(k)];
    const auto [mu, tau2] = predict(post, x);
    d.mu[k] = mu;
    d.tau[k] = std::sqrt(tau2);
    if (alpha == 0.0) {
      d.scores[k] = mu;  // degenerate sampling: greedy on the mean
    } else {
      const Eigen::VectorXd draw =
          sample_gaussian(post.mean, alpha * alpha * post.cov, rng,
                          "select_ebm_ts");
      d.scores[k] = x.dot(draw);
    }
  }
  d.arm = argmax_lowest_index(d.scores);
  return d;
}

Decision select_baseline(PolicyKind kind,
                         const std::vector<SufficientStats>& per_arm_stats,
                         const Eigen::VectorXd& x, double alpha, double lambda,
                         Rng& rng) {
  if (kind != PolicyKind::lin_ts && kind != PolicyKind::lin_ucb &&
      kind != PolicyKind::ols_greedy) {
    throw std::invalid_argument("select_baseline: not a baseline kind");
  }
  const int n_arms = static_cast<int>(per_arm_stats.size());
  const int dim = static_cast<int>(x.size());
  const Eigen::MatrixXd ridge =
      lambda * Eigen::MatrixXd::Identity(dim, dim);
  Decision d;
  d.scores.resize(n_arms);
  d.mu.resize(n_arms);
  d.tau.resize(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    const auto& s = per_arm_stats[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd a_inv =
        spd_inverse(s.gram + ridge, "select_baseline");
    const Eigen::VectorXd theta = a_inv * s.xty;
    d.mu[k] = x.dot(theta);
    d.tau[k] = std::sqrt(std::max(0.0, x.dot(a_inv * x)));
    switch (kind) {
      case PolicyKind::lin_ucb:
        d.scores[k] = d.mu[k] + alpha * d.tau[k];
        break;
      case PolicyKind::lin_ts:
        d.scores[k] =
            alpha == 0.0
                ? d.mu[k]
                : x.dot(sample_gaussian(theta, alpha * alpha * a_inv, rng,
                                        "select_baseline (LinTS)"));
        break;
      default:
        d.scores[k] = d.mu[k];  // greedy: alpha ignored
        break;
    }
  }
  d.arm = argmax_lowest_index(d.scores);
  return d;
}

std::optional<int> forced_initialization(
    std::int64_t t_instance, int n_arms, int min_pulls,
    const std::vector<std::int64_t>& pull_counts) {
  if (t_instance > static_cast<std::int64_t>(n_arms) * min_pulls) {
    return std::nullopt;  // quota necessarily satisfied
  }
  for (int k = 0; k < n_arms; ++k) {
    if (pull_counts[static_cast<std::size_t>(k)] < min_pulls) return k;
  }
  return std::nullopt;
}

}  // namespace ebm
