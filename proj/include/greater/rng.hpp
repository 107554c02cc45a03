#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "greater/error.hpp"

namespace greater {

// Deterministic random source. Wraps std::mt19937_64 (whose output sequence is
// fixed by the standard) but converts to doubles by hand: the std::*_distribution
// classes are implementation-defined, which would break the bit-identical-rerun
// guarantee across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 significant bits.
  double canonical() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw Error(Errc::InvalidParameter, "uniform: requires lo < hi");
    return lo + (hi - lo) * canonical();
  }

  // Standard normal via Box-Muller; the spare value is cached so a stream of
  // normals consumes one uniform pair per two values.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = canonical();
    double u2 = canonical();
    while (u1 <= 0.0) u1 = canonical();  // log(0) guard; astronomically rare
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n) without modulo bias (Lemire's multiply-shift,
  // rejection on the low slice).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error(Errc::InvalidParameter, "below: n must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Fisher-Yates, deterministic given the engine state.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Derives an independent child seed from a base seed, a role tag, and up to
// three indices (epoch / batch / document, say). Used everywhere a nested
// component needs its own stream so that reordering unrelated work cannot
// change the draws another component sees.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = detail::splitmix64(base);
  for (char ch : tag) h = detail::splitmix64(h ^ static_cast<std::uint8_t>(ch));
  h = detail::splitmix64(h ^ a);
  h = detail::splitmix64(h ^ b);
  h = detail::splitmix64(h ^ c);
  return h;
}

}  // namespace greater
