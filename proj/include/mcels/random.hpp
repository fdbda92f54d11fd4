#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace mcels {

  /// Seeded mt19937_64 with hand-derived uniform, normal and index draws.
  class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer on [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
      const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
      std::uint64_t r;
      do { r = engine_(); } while (r >= limit);
      return r % n;
    }

    /// Standard normal via Box-Muller (one value per call, the pair's twin is discarded).
    double normal() {
      double u1 = uniform01();
      while (u1 <= 0.0) u1 = uniform01();
      const double u2 = uniform01();
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template<typename T>
    void shuffle(std::span<T> items) {
      for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(i));
        std::swap(items[i - 1], items[j]);
      }
    }

  private:
    std::mt19937_64 engine_;
  };

} // namespace mcels
