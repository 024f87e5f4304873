#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace r2opt {

/// Splittable counter-based random stream.
///
/// Every draw is a pure function of (key, counter), so a stream can be
/// forked into named or indexed children without coupling their sequences.
/// All distributions are implemented here rather than through <random> so
/// results are identical across standard library implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Independent stream derived from this stream's key and a label.
  /// Does not advance this stream.
  [[nodiscard]] RandomStream child(std::string_view name) const;
  [[nodiscard]] RandomStream child(std::uint64_t index) const;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one variate per two uniforms).
  double normal();
  /// Unit-rate exponential.
  double exponential();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  RandomStream(std::uint64_t key, std::uint64_t counter, int /*raw*/);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// 64-bit FNV-1a, used for stream labels and content digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace r2opt
