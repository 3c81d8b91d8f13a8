#ifndef TREELIFT_RNG_HPP
#define TREELIFT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

// Counter-based deterministic RNG. Everything here is pinned to exact
// integer arithmetic so that results are reproducible bit-for-bit for a
// fixed seed, independent of platform stdlib or thread count. Standard
// library distributions are implementation-defined and cannot give that
// guarantee, which is why the small amount of sampling code below is
// written out explicitly.

namespace treelift {

// splitmix64 finalizer
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t hash_combine(uint64_t h, uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline uint64_t hash_u64(uint64_t a, uint64_t b) { return hash_combine(mix64(a), b); }
inline uint64_t hash_u64(uint64_t a, uint64_t b, uint64_t c) {
  return hash_combine(hash_u64(a, b), c);
}
inline uint64_t hash_u64(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return hash_combine(hash_u64(a, b, c), d);
}

// 64-bit FNV-1a, used for content hashes of datasets and artifacts.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    update(&v, sizeof(T));
  }
  template <typename T>
  void update_span(std::span<const T> s) {
    update(s.data(), s.size_bytes());
  }
  uint64_t digest() const { return state_; }

 private:
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // uniform in [0, 1)
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1); never returns exactly 0 so it is safe under log()
  double unit_open() {
    return static_cast<double>((next_u64() >> 11) | 1ULL) * 0x1.0p-53;
  }

  // unbiased uniform integer in [0, n), n >= 1
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal, Box-Muller (one value per call)
  double normal() {
    double u1 = unit_open();
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson draw. Knuth's product method for small rates, Hormann's PTRS
  // transformed rejection for large ones. Both are exact-arithmetic loops.
  int64_t poisson(double lambda);

  // in-place Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Standard-normal value derived purely from a hash key; used for the fixed
// per-(feature,category) effect tables in the synthetic generator.
inline double hashed_normal(uint64_t key) {
  double u1 = static_cast<double>((mix64(key ^ 0x7a3f9c45d2e81b6dULL) >> 11) | 1ULL) * 0x1.0p-53;
  double u2 = static_cast<double>(mix64(key ^ 0x164e5cc3a8f09277ULL) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace treelift

#endif  // TREELIFT_RNG_HPP
