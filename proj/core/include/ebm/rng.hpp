#pragma once

#include <cstdint>
#include <random>

namespace ebm {

/// Deterministic random stream with cheap substream derivation.
///
/// Every stochastic component (arrivals, contexts, rewards, policy draws)
/// owns its own stream forked from the episode seed, so replications are
/// reproducible and independent of evaluation order. Copying an Rng clones
/// its state; the copy replays the same sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(mix(seed), FromMixed{}) {}

  /// Derives an independent stream identified by `tag`.
  Rng fork(std::uint64_t tag) const {
    return Rng(mix(material_ ^ mix(tag)), FromMixed{});
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  /// Standard normal draw. The distribution object is transient so the
  /// stream state is exactly the engine state (clone-safe).
  double normal() {
    return std::normal_distribution<double>(0.0, 1.0)(engine_);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  struct FromMixed {};

  // splitmix64 finalizer; decorrelates sequential seeds and fork tags.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  Rng(std::uint64_t material, FromMixed)
      : engine_(material), material_(material) {}

  std::mt19937_64 engine_;
  std::uint64_t material_;
};

}  // namespace ebm
