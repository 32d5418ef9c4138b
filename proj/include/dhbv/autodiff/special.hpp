#pragma once

namespace dhbv::ad {

/// log|Gamma(x)| via the Lanczos approximation (g = 7, 9 coefficients).
/// Absolute error below 1e-10 on [0.05, 50]; x must be positive.
double log_gamma(double x);

/// Digamma psi(x) = d/dx log Gamma(x), x > 0.
/// Recurrence up to x >= 6, then the asymptotic series.
double digamma(double x);

}  // namespace dhbv::ad
