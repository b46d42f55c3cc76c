#include "abem/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace abem {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

// Ascending series pieces: J_0(x) and S(x) = sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2
// with q = x^2/4, so that Y_0 = (2/pi) [(log(x/2) + gamma) J_0 + S].
struct SeriesParts {
  double j0;
  double s;
};

SeriesParts ascending_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double harmonic = 0.0;
  double j0 = 1.0;
  double s = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    j0 += term;
    s -= harmonic * term;
    if (std::abs(term) * (1.0 + harmonic) < 1e-17 * (std::abs(j0) + std::abs(s) + 1e-300)) break;
  }
  return {j0, s};
}

BesselJY asymptotic(double x) {
  // H_0 = sqrt(2/(pi x)) (P + iQ) exp(i(x - pi/4)).
  const double eightx = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double a = 1.0;  // a_k / x^k, with sign (-1)^{floor(k/2)} folded in below
  double prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= -(odd * odd) / (k * eightx);
    if (std::abs(a) > prev) break;  // asymptotic series started to diverge
    prev = std::abs(a);
    // a now holds a_k(0)/x^k; P takes even k with sign (-1)^{k/2},
    // Q takes odd k with sign (-1)^{(k-1)/2}.
    if (k % 2 == 0)
      p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * a;
    else
      q += (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * a;
    if (prev < 1e-17) break;
  }
  const double chi = x - 0.25 * std::numbers::pi;
  const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
  const double c = std::cos(chi), s = std::sin(chi);
  return {amp * (p * c - q * s), amp * (p * s + q * c)};
}

}  // namespace

BesselJY bessel_j0_y0(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_j0_y0: argument must be positive");
  if (x > kHankelSeriesLimit) return asymptotic(x);
  const auto [j0, s] = ascending_series(x);
  const double y0 = (2.0 / std::numbers::pi) * ((std::log(0.5 * x) + kEulerGamma) * j0 + s);
  return {j0, y0};
}

std::complex<double> hankel_h0(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("hankel_h0: argument must be positive");
  const auto [j0, y0] = bessel_j0_y0(x);
  return {j0, y0};
}

std::complex<double> helmholtz_regular_part(double kappa, double r) {
  if (!(kappa > 0.0)) throw std::invalid_argument("helmholtz_regular_part: kappa must be positive");
  if (r < 0.0) throw std::invalid_argument("helmholtz_regular_part: negative distance");
  constexpr double inv2pi = 0.5 / std::numbers::pi;
  const double x = kappa * r;
  if (x > kHankelSeriesLimit) {
    const auto [j0, y0] = asymptotic(x);
    return {-0.25 * y0 + inv2pi * std::log(r), 0.25 * j0};
  }
  if (r == 0.0) return {-inv2pi * (std::log(0.5 * kappa) + kEulerGamma), 0.25};
  // -Y_0/4 + log(r)/(2pi) with the log r J_0 part combined as log(r) (1 - J_0).
  const auto [j0, s] = ascending_series(x);
  const double re = -inv2pi * ((std::log(0.5 * kappa) + kEulerGamma) * j0 + s) + inv2pi * std::log(r) * (1.0 - j0);
  return {re, 0.25 * j0};
}

}  // namespace abem
