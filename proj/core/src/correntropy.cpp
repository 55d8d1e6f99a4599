#include "robustkf/correntropy.hpp"

#include <cmath>
#include <string>

#include "robustkf/error.hpp"

namespace robustkf {

double gaussian_kernel(double e, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidBandwidth, "kernel bandwidth must be positive, got " +
                                                 std::to_string(sigma));
  }
  const double z = e / sigma;
  return std::exp(-0.5 * z * z);
}

double correntropy_estimate(std::span<const double> errors, double sigma) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "correntropy_estimate: no samples");
  double acc = 0.0;
  for (double e : errors) acc += gaussian_kernel(e, sigma);
  return acc / static_cast<double>(errors.size());
}

}  // namespace robustkf
