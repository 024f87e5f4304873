#include "r2opt/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace r2opt {

namespace {

// Stafford variant 13 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomStream::RandomStream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

RandomStream::RandomStream(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * kGolden + 0x632be59bd9b4e019ULL));
}

RandomStream RandomStream::child(std::string_view name) const {
  return {mix64(key_ ^ fnv1a64(name)) ^ 0x5851f42d4c957f2dULL, 0, 0};
}

RandomStream RandomStream::child(std::uint64_t index) const {
  return {mix64(key_ + mix64(index ^ 0xd1b54a32d192ed03ULL)), 0, 0};
}

double RandomStream::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RandomStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-54;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::exponential() { return -std::log1p(-uniform()); }

std::uint64_t RandomStream::index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::index: n must be positive");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return r % n;
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

}  // namespace r2opt
