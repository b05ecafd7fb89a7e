#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cmi {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Seedable, splittable random stream.  Substreams are derived purely from
// the root key and an index path, so any worker can reconstruct its stream
// independently of scheduling order.  All draw methods are implemented here
// (not via std::*_distribution) so sequences are fixed by this header alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed), eng_(detail::splitmix64(seed)) {}

  Rng substream(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t k = key_;
    for (std::uint64_t p : path) k = detail::splitmix64(k ^ (p + 0x632be59bd9b4e019ULL));
    return Rng(k);
  }

  std::uint64_t key() const { return key_; }

  // uniform on [0,1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive range
  std::uint64_t uniform_index(std::uint64_t n) {
    // rejection-free modulo bias is negligible for n << 2^64; keep it simple
    return eng_() % n;
  }

  // standard normal via Box-Muller (cached spare)
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cmi
