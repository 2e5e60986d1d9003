#pragma once

#include <cstdint>
#include <string_view>

namespace trajex {

/// Counter-based generator: output i of a stream is splitmix64's finalizer
/// applied to key + (i + 1) * golden-gamma, with key derived from the seed and
/// a stream label. Streams are independent of each other and of call order
/// in other streams. Distributions are implemented here (not via <random>) so
/// sequences are identical across standard libraries.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-counter/v1";

  CounterRng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64();
  /// Uniform in (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  double exponential(double rate);
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace trajex
