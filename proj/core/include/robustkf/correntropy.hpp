#pragma once

#include <span>

namespace robustkf {

/// G_σ(e) = exp(−e² / (2σ²)). Throws InvalidBandwidth unless σ > 0.
double gaussian_kernel(double e, double sigma);

/// Sample correntropy (1/N)·Σ G_σ(e_i); equal to the MCC cost of the errors.
double correntropy_estimate(std::span<const double> errors, double sigma);

}  // namespace robustkf
