#pragma once

#include <cstdint>
#include <random>

namespace dash {

/// Seeded random source. One instance per simulation run; state is owned by
/// the caller and never shared between runs. The same seed and call sequence
/// reproduce the same draws.
class SeededRandomSource {
 public:
  explicit SeededRandomSource(std::uint64_t seed) : engine_(seed) {}

  std::mt19937_64& engine() { return engine_; }

  /// Uniform draw in [0, 1) built from the top 53 engine bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal(double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; the documented stream-splitting mix for harness
/// cells. Mixing on intrinsic cell identity keeps existing cells stable
/// when a plan grows.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

}  // namespace dash
