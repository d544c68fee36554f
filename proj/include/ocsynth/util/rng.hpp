#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ocs {

// Seeded generator with portable value mappings. std:: distributions are
// implementation-defined, so draws are mapped by hand to keep outputs identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for work item `index` under `seed` (splitmix64 mix).
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed of the per-item stream used by Rng::stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ocs
