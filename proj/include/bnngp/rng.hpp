#pragma once

#include <cmath>
#include <cstdint>

namespace bnngp {

/// Root of a reproducible random stream. Streams for sample s are derived
/// with child(s), so results do not depend on how samples are scheduled.
struct RngSeed {
  std::uint64_t seed = 0;

  RngSeed child(std::uint64_t index) const;
};

std::uint64_t mix64(std::uint64_t x);

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  explicit SplitMix64(RngSeed seed) : state_(seed.seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in the open interval (0, 1), 53 random bits.
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard normals by the Box-Muller transform, two per pair of uniforms.
class NormalStream {
 public:
  explicit NormalStream(RngSeed seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(gen_.uniform()));
    const double t = 2.0 * M_PI * gen_.uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  template <class Range>
  void fill(Range&& out) {
    for (auto& v : out) v = next();
  }

  void fill(double* out, long n) {
    for (long i = 0; i < n; ++i) out[i] = next();
  }

 private:
  SplitMix64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bnngp
