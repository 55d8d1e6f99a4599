#pragma once

#include <cstdint>
#include <random>

namespace robustkf {

/// Seedable random stream used by every simulation.
///
/// Engine: std::mt19937_64 (fully specified by the C++ standard, so draws are
/// identical across platforms). Uniforms take the top 53 bits of one engine
/// output. Gaussians use the basic Box–Muller transform and always consume
/// exactly two uniforms per sample (the sine branch is discarded), so the
/// draw count per sample never depends on earlier draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for run `index` of a sweep seeded with `master`.
  static RandomStream substream(std::uint64_t master, std::uint64_t index);

  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal via Box–Muller.
  double standard_normal();
  double normal(double mean, double variance);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to decorrelate substream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

}  // namespace robustkf
