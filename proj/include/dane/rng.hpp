#ifndef DANE_RNG_HPP
#define DANE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "dane/common.hpp"

namespace dane {

/// A reproducibility handle: the same seed with the same configuration must
/// produce bit-identical datasets, partitions and solver trajectories.
struct Seed {
  std::uint64_t value = 0;
};

// splitmix64 step; used both as a seed mixer and for substream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream seed from `base` and an integer tag.
/// Substreams let one logical seed drive several generators (features,
/// ground truth, noise, partition shuffle, per-round solver streams)
/// without any cross-talk between them.
inline Seed derive_seed(Seed base, std::uint64_t tag) {
  std::uint64_t s = base.value ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL);
  return Seed{splitmix64(s)};
}

/// Derives a substream seed from a string label (FNV-1a, then mixed).
inline Seed derive_seed(Seed base, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base, h);
}

/// Deterministic, portable random generator.
///
/// Bulk generation uses std::mt19937_64 (its output sequence is pinned by the
/// standard), and all derived quantities below are computed with fixed
/// algorithms, so streams are identical across platforms:
///   - uniform(): high 53 bits mapped to [0,1)
///   - normal(): Box-Muller on uniform pairs
///   - bounded(n): Lemire multiply-shift with rejection (unbiased)
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed.value) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t bounded_u64(std::uint64_t n) {
    if (n == 0) throw ContractError("bounded_u64: n must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (-n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  Index bounded(Index n) {
    return static_cast<Index>(bounded_u64(static_cast<std::uint64_t>(n)));
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dane

#endif  // DANE_RNG_HPP
