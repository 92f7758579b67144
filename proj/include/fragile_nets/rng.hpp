#pragma once

#include <cmath>
#include <cstdint>

namespace fragile_nets {

// Counter-based generator: every draw is a pure function of (seed, key).
// Keys are (stream, a, b, c) tuples; simulations key draws by
// (stream, type, particle id, step), so results do not depend on evaluation
// order and permuting particle storage leaves every trajectory unchanged.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t word(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                     std::uint64_t c) const {
    std::uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc908ull);
    h = mix(h ^ stream);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
  }

  // Uniform on (0, 1]; never returns 0, so log() is safe.
  double uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                 std::uint64_t c) const {
    return ((word(stream, a, b, c) >> 11) + 1) * 0x1.0p-53;
  }

  double normal(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                std::uint64_t c) const {
    double u1 = uniform(stream, a, b, 2 * c);
    double u2 = uniform(stream, a, b, 2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t seed_;
};

// Draw streams. Fixed numbering is part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t init = 1;       // initial particle values
inline constexpr std::uint64_t diffusion = 2;  // per-step Brownian increments
inline constexpr std::uint64_t generic = 3;    // everything else (tests, configs)
}  // namespace stream

}  // namespace fragile_nets
