#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace holodyn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// All randomness in a run flows from one root seed. A sub-stream is addressed
// by (tag, index); the derivation below is the documented contract, so any
// stage of a pipeline can be reproduced in isolation.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(root ^ fnv1a(tag));
  return splitmix64(s ^ (index * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull));
}

// mt19937_64 with hand-rolled value mappings so streams are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  std::uint64_t bits() { return g_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(g_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  std::uint64_t below(std::uint64_t n) {  // uniform in [0, n)
    // 128-bit multiply trick; bias is < 2^-64, irrelevant at desk scale.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(g_()) * n) >> 64);
  }

  std::complex<double> disc() {  // uniform on the unit disc
    for (;;) {
      double x = uniform(-1.0, 1.0), y = uniform(-1.0, 1.0);
      if (x * x + y * y <= 1.0) return {x, y};
    }
  }

 private:
  std::mt19937_64 g_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace holodyn
