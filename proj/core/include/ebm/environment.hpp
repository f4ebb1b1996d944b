#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebm/rng.hpp"

namespace ebm {

/// An environment file failed validation; the message names the offending
/// key.
class EnvFormatError : public std::runtime_error {
 public:
  explicit EnvFormatError(const std::string& what)
      : std::runtime_error(what) {}
};

enum class ContextKind { mixture_gaussian, uniform };

struct ContextDistribution {
  ContextKind kind = ContextKind::mixture_gaussian;
  // mixture_gaussian: component means +-center, common sd, P(first) = weight
  double weight = 0.5;
  double mean_low = -1.0;
  double mean_high = 1.0;
  double sd = 1.0;
  // uniform: support bounds
  double low = -1.0;
  double high = 1.0;

  void validate() const;
};

enum class ArrivalMode { balanced, data_poor };

/// Ground truth of a multi-bandit environment: the simulator's hidden state.
struct EnvTruth {
  int n_instances = 0;
  int n_arms = 0;
  int dim = 0;
  /// coeffs[j][k] is the coefficient vector of arm k in instance j.
  std::vector<std::vector<Eigen::VectorXd>> coeffs;
  /// Arm-level shared coefficient vectors.
  std::vector<Eigen::VectorXd> shared_coeffs;
  /// Per-arm covariance of instance coefficients around the shared vector.
  std::vector<Eigen::MatrixXd> prior_cov;
  /// Per-arm reward-noise standard deviation.
  std::vector<double> noise_sd;
  /// Arrival probabilities over instances; sums to one.
  Eigen::VectorXd arrival;
  ContextDistribution context;

  void validate() const;

  /// Largest coefficient norm over all (instance, arm) pairs.
  double max_coeff_norm() const;
};

/// Arrival probabilities for the two sampling regimes. In the data-poor
/// regime instance 0 arrives ten times less often than each of the others.
Eigen::VectorXd make_arrival(int n_instances, ArrivalMode mode);

/// Hierarchical synthetic environment: shared coefficients drawn from a
/// unit Gaussian, per-arm covariance b b^T + I with b a unit Gaussian draw,
/// instance coefficients drawn around the shared vector, unit reward noise.
EnvTruth generate_hierarchical_env(int n_instances, int n_arms, int dim,
                                   ArrivalMode mode, Rng& rng);

/// Sparse-heterogeneity variant: each instance deviates from the shared
/// vector in exactly `support` uniformly chosen coordinates.
EnvTruth generate_sparse_env(int n_instances, int n_arms, int dim, int support,
                             double delta_scale, ArrivalMode mode, Rng& rng);

Eigen::VectorXd sample_context(const ContextDistribution& dist, int dim,
                               Rng& rng);

int sample_arrival(const Eigen::VectorXd& arrival, Rng& rng);

double sample_reward(const EnvTruth& env, int instance, int arm,
                     const Eigen::VectorXd& x, Rng& rng);

/// JSON environment file round-trip. Writes every float at full precision
/// so read(write(env)) is bit-exact; read validates all invariants and
/// rejects with the offending key in the message.
void save_env(const EnvTruth& env, const std::filesystem::path& path);
EnvTruth load_env(const std::filesystem::path& path);

}  // namespace ebm
