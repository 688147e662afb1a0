#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace prn {

// Thin wrapper over std::mt19937_64 with hand-rolled draws. The engine's bit
// stream is pinned by the standard, and avoiding std::uniform_*_distribution
// keeps every draw identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % range);
  }

  bool chance(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// FNV-1a over bytes; used to derive per-key seeds.
inline std::uint64_t fnv1a64(std::span<const char> bytes,
                             std::uint64_t seed = 14695981039346656037ull) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace prn
