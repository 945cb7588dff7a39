#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clothrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic RNG. All distributions are built on the raw 64-bit stream
/// so draw sequences do not depend on the standard library's distribution
/// implementations. Named substreams derived from one seed are independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::string_view stream) const {
    return Rng(splitmix64(seed_ ^ fnv1a64(stream)));
  }
  Rng derive(std::string_view stream, std::uint64_t index) const {
    return Rng(splitmix64(splitmix64(seed_ ^ fnv1a64(stream)) + index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t bucket = ~0ull / n;
    const std::uint64_t limit = bucket * n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r / bucket;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; the second value of each pair is cached.
  double normal(double mu = 0.0, double sigma = 1.0) {
    if (has_cached_) {
      has_cached_ = false;
      return mu + sigma * cached_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double a = kTwoPi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return mu + sigma * r * std::cos(a);
  }

  std::string save_state() const {
    std::ostringstream os;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &cached_, sizeof(bits));
    os << seed_ << ' ' << int(has_cached_) << ' ' << bits << ' ' << engine_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    std::uint64_t bits = 0;
    int cached_flag = 0;
    is >> seed_ >> cached_flag >> bits >> engine_;
    if (!is) throw std::runtime_error("Rng::load_state: malformed state string");
    has_cached_ = cached_flag != 0;
    std::memcpy(&cached_, &bits, sizeof(cached_));
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace clothrl
