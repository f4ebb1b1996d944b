#include "ebm/posterior.hpp"

#include <cmath>
#include <stdexcept>

#include "ebm/linalg.hpp"

namespace ebm {

namespace {

// (X^T X + noise_var * prior_prec)^-1, the d-by-d core of every formula.
Eigen::MatrixXd conditional_cov_core(const SufficientStats& stats,
                                     const ArmPriorState& prior) {
  return spd_inverse(stats.gram + prior.noise_var() * prior.prior_prec(),
                     "conditional posterior");
}

}  // namespace

ArmPriorState::ArmPriorState(Eigen::MatrixXd prior_cov, double noise_var,
                             double ridge)
    : prior_cov_(std::move(prior_cov)), noise_var_(noise_var), ridge_(ridge) {
  if (noise_var_ <= 0.0) {
    throw std::invalid_argument("ArmPriorState: noise variance must be > 0");
  }
  if (ridge_ <= 0.0) {
    throw std::invalid_argument("ArmPriorState: ridge precision must be > 0");
  }
  if (prior_cov_.rows() != prior_cov_.cols()) {
    throw std::invalid_argument("ArmPriorState: covariance must be square");
  }
  if ((prior_cov_ - prior_cov_.transpose()).cwiseAbs().maxCoeff() >
      kSymmetryTol) {
    throw std::invalid_argument("ArmPriorState: covariance must be symmetric");
  }
  prior_prec_ = spd_inverse(prior_cov_, "prior covariance");
}

GaussianPosterior conditional_posterior(const SufficientStats& stats,
                                        const ArmPriorState& prior,
                                        const Eigen::VectorXd& shared_mean) {
  if (shared_mean.size() != prior.dim()) {
    throw std::invalid_argument("conditional_posterior: dimension mismatch");
  }
  if (stats.count == 0) {
    // No data: the belief collapses onto the prior around the shared mean.
    return {shared_mean, prior.prior_cov()};
  }
  const Eigen::MatrixXd core = conditional_cov_core(stats, prior);
  GaussianPosterior out;
  out.mean = core * (prior.noise_var() * (prior.prior_prec() * shared_mean) +
                     stats.xty);
  out.cov = symmetrize(prior.noise_var() * core);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> weighted_gram(
    const SufficientStats& stats, const ArmPriorState& prior) {
  const int d = prior.dim();
  if (stats.count == 0) {
    return {Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
  }
  const Eigen::MatrixXd core = conditional_cov_core(stats, prior);
  Eigen::MatrixXd g = symmetrize(
      prior.prior_prec() -
      prior.noise_var() * prior.prior_prec() * core * prior.prior_prec());
  Eigen::VectorXd v =
      (stats.xty - stats.gram * (core * stats.xty)) / prior.noise_var();
  return {std::move(g), std::move(v)};
}

GaussianPosterior shared_posterior(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& grams,
    double ridge) {
  if (ridge <= 0.0) {
    throw std::invalid_argument("shared_posterior: ridge must be > 0");
  }
  if (grams.empty()) {
    throw std::invalid_argument("shared_posterior: no instances");
  }
  const int d = static_cast<int>(grams.front().first.rows());
  Eigen::MatrixXd prec = ridge * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (const auto& [g, v] : grams) {
    if (g.rows() != d || v.size() != d) {
      throw std::invalid_argument("shared_posterior: dimension mismatch");
    }
    prec += g;
    rhs += v;
  }
  GaussianPosterior out;
  out.cov = spd_inverse(prec, "shared posterior");
  out.mean = out.cov * rhs;
  return out;
}

GaussianPosterior marginal_posterior(const SufficientStats& stats,
                                     const ArmPriorState& prior,
                                     const GaussianPosterior& shared) {
  GaussianPosterior out;
  if (stats.count == 0) {
    out.mean = shared.mean;
    out.cov = symmetrize(prior.prior_cov() + shared.cov);
    return out;
  }
  const Eigen::MatrixXd core = conditional_cov_core(stats, prior);
  const double s2 = prior.noise_var();
  // shrink maps shared-mean space into this instance's coefficient space.
  const Eigen::MatrixXd shrink = s2 * core * prior.prior_prec();
  out.mean = shrink * shared.mean + core * stats.xty;
  out.cov = symmetrize(s2 * core + shrink * shared.cov * shrink.transpose());
  return out;
}

std::pair<double, double> predict(const GaussianPosterior& posterior,
                                  const Eigen::VectorXd& x) {
  if (x.size() != posterior.mean.size()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  const double mu = posterior.mean.dot(x);
  double tau2 = x.dot(posterior.cov * x);
  if (tau2 < 0.0) {
    if (tau2 < kPsdTol) {
      throw NumericalError("predict: variance " + std::to_string(tau2) +
                           " is materially negative");
    }
    tau2 = 0.0;
  }
  return {mu, tau2};
}

PosteriorEngine::PosteriorEngine(int n_instances, ArmPriorState prior)
    : prior_(std::move(prior)) {
  if (n_instances < 1) {
    throw std::invalid_argument("PosteriorEngine: need at least one instance");
  }
  stats_.assign(static_cast<std::size_t>(n_instances),
                SufficientStats(prior_.dim()));
  gram_cache_.assign(
      static_cast<std::size_t>(n_instances),
      {Eigen::MatrixXd::Zero(prior_.dim(), prior_.dim()),
       Eigen::VectorXd::Zero(prior_.dim())});
  refresh_shared();
}

void PosteriorEngine::set_prior(ArmPriorState prior) {
  if (prior.dim() != prior_.dim()) {
    throw std::invalid_argument("set_prior: dimension mismatch");
  }
  prior_ = std::move(prior);
  for (int j = 0; j < n_instances(); ++j) refresh_instance(j);
  refresh_shared();
}

void PosteriorEngine::update(int instance, const Eigen::VectorXd& x,
                             double y) {
  auto& s = stats_[static_cast<std::size_t>(instance)];
  s = update_stats(s, x, y);
  refresh_instance(instance);
  refresh_shared();
}

GaussianPosterior PosteriorEngine::marginal(int instance) const {
  return marginal_posterior(stats_[static_cast<std::size_t>(instance)], prior_,
                            shared_);
}

std::int64_t PosteriorEngine::total_count() const {
  std::int64_t total = 0;
  for (const auto& s : stats_) total += s.count;
  return total;
}

void PosteriorEngine::refresh_instance(int instance) {
  gram_cache_[static_cast<std::size_t>(instance)] =
      weighted_gram(stats_[static_cast<std::size_t>(instance)], prior_);
}

void PosteriorEngine::refresh_shared() {
  shared_ = shared_posterior(gram_cache_, prior_.ridge());
}

}  // namespace ebm
