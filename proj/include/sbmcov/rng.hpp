#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>

namespace sbmcov {

/// SplitMix64 finalizer. Used to derive well-separated seeds from
/// (master seed, stream index) pairs.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Random source with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so uniform, bounded and
/// normal draws are implemented here to keep results bit-identical across
/// standard libraries. Independent streams are obtained with `split`, keyed
/// by an index, so a trial's stream never depends on scheduling order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(mix64(seed)), engine_(seed_) {}

  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(stream_seed(master, index), Raw{});
  }

  /// Child stream; depends only on this generator's seed and `index`.
  [[nodiscard]] Rng split(std::uint64_t index) const {
    return stream(seed_, index);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer on [0, bound), unbiased (Lemire's method).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    __uint128_t m = static_cast<__uint128_t>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  struct Raw {};
  Rng(std::uint64_t s, Raw) : seed_(s), engine_(s) {}

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace sbmcov
