#include "robustkf/rng.hpp"

#include <cmath>
#include <numbers>

namespace robustkf {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::substream(std::uint64_t master, std::uint64_t index) {
  return RandomStream(mix_seed(mix_seed(master) ^ mix_seed(index + 0x5851F42D4C957F2DULL)));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::standard_normal() {
  // 1 − u lies in (0, 1], so the logarithm is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::normal(double mean, double variance) {
  const double z = standard_normal();
  return variance == 0.0 ? mean : mean + std::sqrt(variance) * z;
}

}  // namespace robustkf
