#pragma once

#include <cmath>
#include <cstdint>

namespace dtgan {

/// Seeded pseudo-random stream with explicit, copyable state.
///
/// The generator is splitmix64: the state advances by a fixed odd increment
/// (the stream's "gamma") and each output is a bit-mix of the state. Two
/// states with identical words produce identical streams on every platform,
/// which is what makes trajectories and experiment tables reproducible.
/// Streams are value types; copy one to replay a sequence.
struct RngState {
  static constexpr const char* kAlgorithm = "splitmix64";

  std::uint64_t state = 0;
  std::uint64_t gamma = 0x9e3779b97f4a7c15ull;  // must stay odd

  static RngState seeded(std::uint64_t seed) {
    RngState r;
    r.state = mix(seed ^ 0x5851f42d4c957f2dull);
    return r;
  }

  /// splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state += gamma;
    return mix(state);
  }

  /// Derives an independent substream; the parent advances by two draws so
  /// parent and child never share state words.
  RngState split() {
    RngState child;
    child.state = next_u64();
    child.gamma = next_u64() | 1ull;
    return child;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in {0, ..., bound-1}. Rejection sampling keeps the
  /// draw exactly uniform for any bound.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ull - bound) % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

  /// Standard normal via Box-Muller (cosine branch). Consumes exactly two
  /// uniforms per call, so stream positions are predictable.
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Student-t with `dof` degrees of freedom (Bailey's polar method).
  double next_student_t(double dof) {
    for (;;) {
      const double u = 2.0 * next_double() - 1.0;
      const double v = 2.0 * next_double() - 1.0;
      const double w = u * u + v * v;
      if (w > 0.0 && w < 1.0) {
        return u * std::sqrt(dof * (std::pow(w, -2.0 / dof) - 1.0) / w);
      }
    }
  }

  friend bool operator==(const RngState&, const RngState&) = default;
};

}  // namespace dtgan
