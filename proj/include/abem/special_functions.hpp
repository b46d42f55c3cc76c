#pragma once

#include <complex>

namespace abem {

/// Arguments at or below this value use the ascending series, above it the
/// Hankel asymptotic expansion.
inline constexpr double kHankelSeriesLimit = 12.0;

struct BesselJY {
  double j0;
  double y0;
};

/// J_0 and Y_0 of a positive argument.
BesselJY bessel_j0_y0(double x);

/// First-kind Hankel function of order zero, H_0^{(1)}(x) = J_0(x) + i Y_0(x).
/// Throws std::invalid_argument for x <= 0.
std::complex<double> hankel_h0(double x);

/// Smooth remainder R(r) = (i/4) H_0^{(1)}(kappa r) + log(r) / (2 pi) of the
/// Helmholtz fundamental solution after removing the Laplace kernel. The
/// logarithmic cancellation is resolved analytically, so r = 0 is allowed and
/// yields the limit value.
std::complex<double> helmholtz_regular_part(double kappa, double r);

}  // namespace abem
