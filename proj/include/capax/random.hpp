#ifndef CAPAX_RANDOM_HPP
#define CAPAX_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace capax {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based child seed: stream (a, b) of a master seed. Independent of
/// the order in which streams are consumed, so parallel runs stay reproducible.
inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ (a * 0xD1B54A32D192ED03ull)) ^
                    (b * 0x8CB92BA72F3D8DD7ull + 0x632BE59BD9B4E019ull));
}

/// Portable generator: the distributions are written out so the drawn
/// values do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi].
  long long integer(long long lo, long long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long long>(engine_() % span);
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace capax

#endif  // CAPAX_RANDOM_HPP
