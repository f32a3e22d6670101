#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ragner {

/// splitmix64 finalizer; used to derive independent streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seeded generator whose draws are identical on every standard library.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// distribution classes are not, so uniform draws and shuffles are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();

  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  /// Standard normal via Box-Muller.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, i - 1));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ragner
