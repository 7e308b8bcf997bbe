#pragma once

#include <cstdint>
#include <vector>

namespace mtgn {

/// Deterministic splittable RNG. All distributions are implemented explicitly
/// (no std::*_distribution) so every stream is bit-reproducible across
/// platforms and independent of call-site threading.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of entropy.
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open0();
  /// Standard normal via Box-Muller.
  double normal();
  /// Index into an unnormalized nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& weights);
  /// Index into a log-probability row (normalized in log space first).
  std::size_t categorical_from_logprobs(const std::vector<double>& logp);
  std::int64_t uniform_int(std::int64_t n);  // in [0, n)

  /// Independent child stream; deterministic in (parent seed, tag) and
  /// independent of how many values the parent has produced.
  Rng split(std::uint64_t tag) const;

 private:
  std::uint64_t state_[4];
};

}  // namespace mtgn
