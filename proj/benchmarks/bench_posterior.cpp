#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "ebm/empirical_bayes.hpp"
#include "ebm/policies.hpp"
#include "ebm/posterior.hpp"
#include "ebm/rng.hpp"

namespace {

using namespace ebm;

Eigen::MatrixXd spd(std::mt19937& gen, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = normal(gen);
  return a * a.transpose() + Eigen::MatrixXd::Identity(dim, dim);
}

Eigen::VectorXd vec(std::mt19937& gen, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(gen);
  return v;
}

PosteriorEngine seeded_engine(int n_instances, int dim, int pulls) {
  std::mt19937 gen(17);
  PosteriorEngine engine(n_instances, ArmPriorState(spd(gen, dim), 1.0, 0.001));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j = 0; j < n_instances; ++j) {
    for (int t = 0; t < pulls; ++t) {
      engine.update(j, vec(gen, dim), normal(gen));
    }
  }
  return engine;
}

void BM_engine_update(benchmark::State& state) {
  const int n_instances = static_cast<int>(state.range(0));
  const int dim = static_cast<int>(state.range(1));
  PosteriorEngine engine = seeded_engine(n_instances, dim, 8);
  std::mt19937 gen(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  int j = 0;
  for (auto _ : state) {
    engine.update(j, vec(gen, dim), normal(gen));
    j = (j + 1) % n_instances;
  }
}
BENCHMARK(BM_engine_update)
    ->Args({10, 3})
    ->Args({10, 8})
    ->Args({50, 3})
    ->Args({50, 8});

void BM_marginal_posterior(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  PosteriorEngine engine = seeded_engine(10, dim, 20);
  int j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.marginal(j));
    j = (j + 1) % 10;
  }
}
BENCHMARK(BM_marginal_posterior)->Arg(3)->Arg(8)->Arg(16);

void BM_decision_ucb(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int n_arms = 5;
  std::mt19937 gen(5);
  std::vector<GaussianPosterior> posteriors;
  for (int k = 0; k < n_arms; ++k) {
    posteriors.push_back({vec(gen, dim), spd(gen, dim)});
  }
  const Eigen::VectorXd x = vec(gen, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_ebm_ucb(posteriors, x, 0.3));
  }
}
BENCHMARK(BM_decision_ucb)->Arg(3)->Arg(8);

void BM_decision_ts(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int n_arms = 5;
  std::mt19937 gen(7);
  std::vector<GaussianPosterior> posteriors;
  for (int k = 0; k < n_arms; ++k) {
    posteriors.push_back({vec(gen, dim), spd(gen, dim)});
  }
  const Eigen::VectorXd x = vec(gen, dim);
  Rng rng(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_ebm_ts(posteriors, x, 0.3, rng));
  }
}
BENCHMARK(BM_decision_ts)->Arg(3)->Arg(8);

void BM_prior_refresh(benchmark::State& state) {
  const int n_instances = static_cast<int>(state.range(0));
  const int dim = 3;
  PosteriorEngine engine = seeded_engine(n_instances, dim, 30);
  PriorEstimator estimator(dim);
  std::vector<Eigen::VectorXd> means;
  for (int j = 0; j < n_instances; ++j) means.push_back(engine.marginal(j).mean);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator.refresh(engine.all_stats(), means));
  }
}
BENCHMARK(BM_prior_refresh)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
