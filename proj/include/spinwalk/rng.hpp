#pragma once

// Reproducible random streams.
//
// Every replica k of a run with 64-bit seed S and subcommand tag T draws from
// its own std::mt19937_64 seeded with
//
//     stream_seed(S, T, k) = mix(mix(mix(S) ^ fnv1a64(T)) ^ k)
//
// where mix is the SplitMix64 finalizer and fnv1a64 the 64-bit FNV-1a hash of
// the tag bytes. Both are fixed integer arithmetic, so the derived seeds are
// identical on every platform and independent of how replicas are scheduled
// onto threads.

#include "spinwalk/core.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <random>
#include <string_view>

namespace spinwalk {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t k) {
  return splitmix64(splitmix64(splitmix64(seed) ^ fnv1a64(tag)) ^ k);
}

class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view tag, std::uint64_t k) : engine_(stream_seed(seed, tag, k)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double normal() { return normal_(engine_); }

  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }

  Vec gaussian(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = normal();
    return v;
  }

  Vec rademacher(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = (engine_() >> 63) ? 1.0 : -1.0;
    return v;
  }

  /// Normalised standard Gaussian: uniform on the unit sphere.
  Vec unit_vector(int d) {
    for (;;) {
      Vec v = gaussian(d);
      const double n = v.norm();
      if (n > 1e-300) return v / n;
    }
  }

  double gamma(double shape, double scale = 1.0) {
    return boost::random::gamma_distribution<double>(shape, scale)(engine_);
  }

  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return boost::random::poisson_distribution<std::int64_t, double>(mean)(engine_);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace spinwalk
