#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ebm/linalg.hpp"
#include "ebm/policies.hpp"
#include "test_helpers.hpp"

using namespace ebm;
using namespace ebm::test;

namespace {

GaussianPosterior scalar_posterior(double mean, double var) {
  return {mean * Eigen::VectorXd::Ones(1), var * Eigen::MatrixXd::Ones(1, 1)};
}

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("exploration scale vanishes at the first step") {
  CHECK(exploration_scale(1, 0.1) == 0.0);
}

TEST_CASE("exploration scale follows a * sqrt(log t)") {
  for (const std::int64_t t : {2, 3, 10, 1000}) {
    CHECK(exploration_scale(t, 0.5) ==
          doctest::Approx(0.5 * std::sqrt(std::log(static_cast<double>(t))))
              .epsilon(1e-14));
  }
}

TEST_CASE("exploration scale rejects t below one") {
  CHECK_THROWS_AS(exploration_scale(0, 0.1), std::invalid_argument);
}

TEST_CASE("ucb scores combine mean and uncertainty") {
  std::vector<GaussianPosterior> posteriors{scalar_posterior(1.0, 0.0),
                                            scalar_posterior(0.0, 0.25)};
  const Decision d =
      select_ebm_ucb(posteriors, Eigen::VectorXd::Ones(1), 1.0);
  CHECK(d.scores[0] == doctest::Approx(1.0));
  CHECK(d.scores[1] == doctest::Approx(0.5));
  CHECK(d.arm == 0);
  CHECK(!d.forced);
}

TEST_CASE("ucb ties break to the lowest index") {
  std::vector<GaussianPosterior> posteriors(3, scalar_posterior(0.7, 0.1));
  const Decision d =
      select_ebm_ucb(posteriors, Eigen::VectorXd::Ones(1), 0.3);
  CHECK(d.arm == 0);
}

TEST_CASE("ucb with zero exploration is greedy") {
  std::vector<GaussianPosterior> posteriors{scalar_posterior(0.2, 9.0),
                                            scalar_posterior(0.5, 0.0)};
  const Decision d =
      select_ebm_ucb(posteriors, Eigen::VectorXd::Ones(1), 0.0);
  CHECK(d.arm == 1);
}

TEST_CASE("ucb argmax is invariant to a common mean shift") {
  std::mt19937 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = random_vector(gen, 2);
    std::vector<GaussianPosterior> posteriors;
    for (int k = 0; k < 4; ++k) {
      posteriors.push_back({random_vector(gen, 2), random_spd(gen, 2)});
    }
    const Decision base = select_ebm_ucb(posteriors, x, 0.7);
    // shift every arm's predicted mean by the same constant c
    const double c = 3.21;
    const double xx = x.squaredNorm();
    REQUIRE(xx > 1e-12);
    for (auto& p : posteriors) p.mean += (c / xx) * x;
    const Decision shifted = select_ebm_ucb(posteriors, x, 0.7);
    CHECK(shifted.arm == base.arm);
  }
}

TEST_CASE("ts with zero exploration equals the greedy ucb choice") {
  std::mt19937 gen(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd x = random_vector(gen, 3);
    std::vector<GaussianPosterior> posteriors;
    for (int k = 0; k < 3; ++k) {
      posteriors.push_back({random_vector(gen, 3), random_spd(gen, 3)});
    }
    Rng rng(42);
    CHECK(select_ebm_ts(posteriors, x, 0.0, rng).arm ==
          select_ebm_ucb(posteriors, x, 0.0).arm);
  }
}

TEST_CASE("ts with a single arm always selects it") {
  std::vector<GaussianPosterior> posteriors{scalar_posterior(-5.0, 2.0)};
  Rng rng(7);
  CHECK(select_ebm_ts(posteriors, Eigen::VectorXd::Ones(1), 1.0, rng).arm == 0);
}

TEST_CASE("ts decisions are reproducible under the same seed") {
  std::mt19937 gen(9);
  std::vector<GaussianPosterior> posteriors;
  for (int k = 0; k < 3; ++k) {
    posteriors.push_back({random_vector(gen, 2), random_spd(gen, 2)});
  }
  const Eigen::VectorXd x = random_vector(gen, 2);
  for (int rep = 0; rep < 5; ++rep) {
    Rng a(1234), b(1234);
    const Decision da = select_ebm_ts(posteriors, x, 0.8, a);
    const Decision db = select_ebm_ts(posteriors, x, 0.8, b);
    CHECK(da.arm == db.arm);
    CHECK(max_abs_diff(da.scores, db.scores) == 0.0);
  }
}

TEST_CASE("two-arm scalar ts selection frequency matches the normal cdf") {
  const double m0 = 0.2, m1 = 0.0, v0 = 0.5, v1 = 0.3, alpha = 0.9;
  std::vector<GaussianPosterior> posteriors{scalar_posterior(m0, v0),
                                            scalar_posterior(m1, v1)};
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  Rng rng(2024);
  const int trials = 100'000;
  int arm0 = 0;
  for (int i = 0; i < trials; ++i) {
    if (select_ebm_ts(posteriors, x, alpha, rng).arm == 0) ++arm0;
  }
  const double expected =
      standard_normal_cdf((m0 - m1) / (alpha * std::sqrt(v0 + v1)));
  CHECK(std::abs(static_cast<double>(arm0) / trials - expected) < 0.01);
}

TEST_CASE("ts selection frequencies match a direct Monte-Carlo oracle") {
  std::mt19937 gen(11);
  const int n_arms = 3, d = 2;
  std::vector<GaussianPosterior> posteriors;
  std::vector<Eigen::MatrixXd> roots;
  for (int k = 0; k < n_arms; ++k) {
    posteriors.push_back({random_vector(gen, d), random_spd(gen, d)});
    roots.push_back(
        Eigen::MatrixXd(posteriors.back().cov.llt().matrixL()));
  }
  const Eigen::VectorXd x = random_vector(gen, d);
  const double alpha = 0.6;
  const int trials = 100'000;

  Eigen::Vector3d policy_freq = Eigen::Vector3d::Zero();
  Rng rng(555);
  for (int i = 0; i < trials; ++i) {
    policy_freq[select_ebm_ts(posteriors, x, alpha, rng).arm] += 1.0;
  }
  policy_freq /= trials;

  // independent sampler: raw Cholesky draws through a separate generator
  Eigen::Vector3d oracle_freq = Eigen::Vector3d::Zero();
  std::mt19937 oracle_gen(777);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < trials; ++i) {
    int best = 0;
    double best_score = -1e300;
    for (int k = 0; k < n_arms; ++k) {
      Eigen::VectorXd z(d);
      for (int c = 0; c < d; ++c) z[c] = normal(oracle_gen);
      const double score =
          x.dot(posteriors[static_cast<std::size_t>(k)].mean +
                alpha * roots[static_cast<std::size_t>(k)] * z);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    oracle_freq[best] += 1.0;
  }
  oracle_freq /= trials;

  for (int k = 0; k < n_arms; ++k) {
    CHECK(std::abs(policy_freq[k] - oracle_freq[k]) < 0.01);
  }
}

TEST_CASE("linucb with no data scores the exploration bonus alone") {
  std::vector<SufficientStats> stats(3, SufficientStats(2));
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  Rng rng(1);
  const Decision d =
      select_baseline(PolicyKind::lin_ucb, stats, x, 0.2, 1.0, rng);
  for (int k = 0; k < 3; ++k) {
    CHECK(d.scores[k] == doctest::Approx(0.2 * 5.0).epsilon(1e-12));
  }
  CHECK(d.arm == 0);
}

TEST_CASE("linucb scalar ridge arithmetic") {
  std::vector<SufficientStats> stats(2, SufficientStats(1));
  stats[0] = update_stats(stats[0], Eigen::VectorXd::Ones(1), 1.0);
  Rng rng(1);
  const Decision d = select_baseline(PolicyKind::lin_ucb, stats,
                                     Eigen::VectorXd::Ones(1), 0.0, 1.0, rng);
  CHECK(d.scores[0] == doctest::Approx(0.5));
  CHECK(d.scores[1] == doctest::Approx(0.0));
  CHECK(d.arm == 0);
}

TEST_CASE("lints with zero exploration reduces to the greedy ridge choice") {
  std::mt19937 gen(13);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<SufficientStats> stats;
    for (int k = 0; k < 3; ++k) {
      stats.push_back(random_regression(gen, 4, 2).stats);
    }
    const Eigen::VectorXd x = random_vector(gen, 2);
    Rng a(9), b(9);
    CHECK(select_baseline(PolicyKind::lin_ts, stats, x, 0.0, 0.5, a).arm ==
          select_baseline(PolicyKind::ols_greedy, stats, x, 0.7, 0.5, b).arm);
  }
}

TEST_CASE("baseline decisions read only the given instance's statistics") {
  std::mt19937 gen(17);
  std::vector<SufficientStats> own;
  for (int k = 0; k < 2; ++k) own.push_back(random_regression(gen, 6, 2).stats);
  const Eigen::VectorXd x = random_vector(gen, 2);
  Rng r1(31), r2(31);
  const Decision first =
      select_baseline(PolicyKind::lin_ucb, own, x, 0.4, 1.0, r1);
  // Interleave building unrelated data for a "different instance"; the
  // decision from identical own-instance inputs must be identical.
  std::vector<SufficientStats> other;
  for (int k = 0; k < 2; ++k) other.push_back(random_regression(gen, 9, 2).stats);
  const Decision second =
      select_baseline(PolicyKind::lin_ucb, own, x, 0.4, 1.0, r2);
  CHECK(first.arm == second.arm);
  CHECK(max_abs_diff(first.scores, second.scores) == 0.0);
}

TEST_CASE("forced initialization walks arms in order") {
  CHECK(forced_initialization(1, 3, 1, {0, 0, 0}) == 0);
  CHECK(forced_initialization(3, 3, 1, {1, 0, 1}) == 1);
  CHECK(!forced_initialization(5, 2, 2, {2, 2}).has_value());
}

TEST_CASE("forced initialization is disabled at quota zero") {
  CHECK(!forced_initialization(1, 3, 0, {0, 0, 0}).has_value());
}

TEST_CASE("policy config validation") {
  PolicyConfig config;
  config.a = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.a = 0.1;
  config.lambda = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("policy kind strings round-trip") {
  for (const PolicyKind kind :
       {PolicyKind::ebm_ts, PolicyKind::ebm_ucb, PolicyKind::lin_ts,
        PolicyKind::lin_ucb, PolicyKind::ols_greedy, PolicyKind::oracle}) {
    CHECK(policy_kind_from_string(to_string(kind)) == kind);
  }
  CHECK(policy_kind_from_string("OLSGreedy") == PolicyKind::ols_greedy);
  CHECK_THROWS_AS(policy_kind_from_string("bogus"), std::invalid_argument);
}

}  // TEST_SUITE
