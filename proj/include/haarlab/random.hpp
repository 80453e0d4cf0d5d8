#ifndef HAARLAB_RANDOM_HPP
#define HAARLAB_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace haarlab {

// splitmix64: cheap, well-mixed 64-bit stream used both as a generator and
// to derive independent child seeds.  Hand-rolled (instead of <random>
// distributions) so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller; deterministic given the seed.
  double normal() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * std::numbers::pi * v);
  }

  int sign() { return (next_u64() & 1u) ? 1 : -1; }

  // Deterministic child seed for a labelled subtask.
  std::uint64_t fork(std::uint64_t label) {
    Rng child(state_ ^ (0xd1342543de82ef95ull * (label + 1)));
    return child.next_u64();
  }

 private:
  std::uint64_t state_;
};

// Non-mutating seed combinator for keying streams by structure (cube
// coordinates, trial indices) rather than by draw order.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  Rng r(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return r.next_u64();
}

} // namespace haarlab

#endif
