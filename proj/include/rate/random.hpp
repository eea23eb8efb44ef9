#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace rate {

// SplitMix64 finalizer. Used to derive independent stream seeds from a master
// seed and a tuple of stream coordinates (cell, replicate, purpose, ...).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(
    std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
  return h;
}

// Stream labels keep the different consumers of one master seed apart.
enum class Stream : std::uint64_t {
  kGenerate = 1,
  kBootstrap = 2,
  kFolds = 3,
  kTrainingSplit = 4,
  kTruth = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns 0, so log() is always finite.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer on [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Sorted sample of `k` distinct positions from [0, n) (selection sampling).
inline std::vector<std::size_t> sample_sorted_without_replacement(
    Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t needed = k;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    const std::size_t remaining = n - i;
    if (rng.uniform() * static_cast<double>(remaining) <
        static_cast<double>(needed)) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

}  // namespace rate
