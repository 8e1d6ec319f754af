#include "presup/rng.hpp"

#include "presup/error.hpp"

namespace presup {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::mix(std::uint64_t z) noexcept {
  // splitmix64 finaliser
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() noexcept {
  return mix(key_ + kGolden * ++counter_);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw UsageError("uniform_index(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection on the biased tail keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

Rng Rng::derive(std::string_view name) const noexcept {
  return Rng(mix(key_ ^ mix(fnv1a(name))), 0);
}

Rng Rng::derive(std::uint64_t index) const noexcept {
  return Rng(mix(key_ ^ mix(index * kGolden + 0x632BE59BD9B4E019ULL)), 0);
}

}  // namespace presup
