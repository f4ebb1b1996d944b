#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>

namespace ebm {

/// Per-(arm, instance) regression accumulators: everything the posterior
/// machinery needs about the raw data stream.
struct SufficientStats {
  Eigen::MatrixXd gram;  ///< sum of x x^T
  Eigen::VectorXd xty;   ///< sum of x * y
  double yty = 0.0;      ///< sum of y^2, for residual sums
  std::int64_t count = 0;

  SufficientStats() = default;
  explicit SufficientStats(int dim)
      : gram(Eigen::MatrixXd::Zero(dim, dim)),
        xty(Eigen::VectorXd::Zero(dim)) {}

  int dim() const { return static_cast<int>(xty.size()); }

  bool operator==(const SufficientStats&) const = default;
};

/// Folds one observation into the accumulators. Pure: the input is untouched.
inline SufficientStats update_stats(const SufficientStats& stats,
                                    const Eigen::VectorXd& x, double y) {
  if (x.size() != stats.xty.size()) {
    throw std::invalid_argument("update_stats: context dimension mismatch");
  }
  SufficientStats out = stats;
  out.gram.noalias() += x * x.transpose();
  out.xty.noalias() += x * y;
  out.yty += y * y;
  out.count += 1;
  return out;
}

}  // namespace ebm
