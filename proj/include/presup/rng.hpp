#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace presup {

// Counter-based generator: draw i is mix(key + i * golden), so the stream is
// a pure function of (seed, draw index) on every platform. derive() splits
// off an independent named stream without consuming draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed)) {}

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  Rng derive(std::string_view name) const noexcept;
  Rng derive(std::uint64_t index) const noexcept;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t draws() const noexcept { return counter_; }

  static std::uint64_t mix(std::uint64_t z) noexcept;

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace presup
