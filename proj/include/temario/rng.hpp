#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace temario {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream identifiers for seed derivation. Each stage draws from its own
/// stream so adding draws to one stage never perturbs another.
enum class Stream : std::uint64_t {
  lda = 1,
  embed = 2,
  kmeans = 3,
  layout = 4,
  topics = 5,
};

/// Derives the seed of an independent stream:
///   mix64(mix64(mix64(master ^ mix64(stream)) ^ a) ^ b)
/// For the coherence sweep, a = k and b = run_index, so every (k, run) pair
/// owns a stream regardless of the order in which pairs are executed.
constexpr std::uint64_t stream_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = mix64(master ^ mix64(static_cast<std::uint64_t>(stream)));
  s = mix64(s ^ a);
  return mix64(s ^ b);
}

/// Seedable generator with portable output. std::mt19937_64 is bit-exact
/// across standard libraries; the std:: distributions are not, so the
/// draws used by the library are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace temario
