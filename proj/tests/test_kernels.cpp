#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "approx.hpp"
#include "abem/kernels.hpp"
#include "abem/quadrature.hpp"
#include "abem/special_functions.hpp"
#include "oracles.hpp"
#include "random_panels.hpp"

using abem::Point;
using abem::Segment;
using testing_util::rel;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("laplace coincident entries") {
  CHECK(abem::slp_coincident_laplace(1.0) == rel(3.0 / (4.0 * std::numbers::pi)).epsilon(1e-14));
  // 0.25 (1.5 - log 0.5) / (2 pi)
  CHECK(abem::slp_coincident_laplace(0.5) == rel(0.0872625537).epsilon(1e-9));
  for (double h : {0.1, 0.2, 0.4, 1.0}) {
    const Segment s({0.1, -0.2}, {0.1 + 0.6 * h, -0.2 + 0.8 * h});
    const double ref = oracle::laplace_entry(s, s);
    CHECK(rel_err(abem::slp_entry_laplace(s, s), ref) < 1e-10);
    CHECK(rel_err(abem::slp_coincident_laplace(h), -h * h * (std::log(h) - 1.5) / (2 * std::numbers::pi)) < 1e-14);
  }
}

TEST_CASE("laplace collinear adjacent") {
  const Segment a({0, 0}, {1, 0}), b({1, 0}, {2, 0});
  const double expect = -(2 * std::log(2.0) - 1.5) / (2 * std::numbers::pi);
  CHECK(abem::slp_entry_laplace(a, b) == rel(expect).epsilon(1e-14));
  CHECK(rel_err(expect, oracle::laplace_entry(a, b)) < 1e-10);
  CHECK(expect == rel(0.0180968145).epsilon(1e-9));
  // overlapping intervals on a line
  CHECK(rel_err(abem::slp_collinear_laplace(0, 1, 0.25, 0.75),
                oracle::laplace_entry(Segment({0, 0}, {1, 0}), Segment({0.25, 0}, {0.75, 0}))) < 1e-10);
}

TEST_CASE("laplace random pairs against quadrature") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 60; ++i) {
    const auto [a, b] = testing_util::random_pair(rng, i);
    const double ref = oracle::laplace_entry(a, b);
    const double got = abem::slp_entry_laplace(a, b);
    INFO("pair " << i << " ref " << ref << " got " << got);
    CHECK(rel_err(got, ref) < 1e-10);
    CHECK(got == abem::slp_entry_laplace(b, a));
  }
}

TEST_CASE("laplace entry refinement consistency") {
  const Segment a({0, 0}, {0.4, 0}), b({0.4, 0}, {0.5, 0.3});
  const Segment a1({0, 0}, {0.2, 0}), a2({0.2, 0}, {0.4, 0});
  const Segment b1({0.4, 0}, {0.45, 0.15}), b2({0.45, 0.15}, {0.5, 0.3});
  double sum = 0.0;
  for (const Segment* x : {&a1, &a2})
    for (const Segment* y : {&b1, &b2}) sum += abem::slp_entry_laplace(*x, *y);
  CHECK(rel_err(sum, abem::slp_entry_laplace(a, b)) < 1e-11);
  const double self = abem::slp_entry_laplace(a1, a1) + abem::slp_entry_laplace(a2, a2) +
                      2 * abem::slp_entry_laplace(a1, a2);
  CHECK(rel_err(self, abem::slp_entry_laplace(a, a)) < 1e-13);
}

TEST_CASE("laplace linear blocks") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    const auto [a, b] = testing_util::random_pair(rng, i);
    const auto blk = abem::slp_linear_block_laplace(a, b);
    const auto swapped = abem::slp_linear_block_laplace(b, a);
    double total = 0.0;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        total += blk[p][q];
        CHECK(blk[p][q] == rel(swapped[q][p]).epsilon(1e-13));
      }
    // shape functions sum to one
    CHECK(rel_err(total, abem::slp_entry_laplace(a, b)) < 1e-10);
    // first moment against the oracle
    const Point a0 = a.start(), a1 = a.end(), b0 = b.start(), b1 = b.end();
    auto inner = [&](double s) {
      const Point x = a0 + s * (a1 - a0);
      const double tc = oracle::closest_param(x, b0, b1);
      return oracle::integrate01(
          [&](double t) { return t * std::log(std::max(abem::norm(x - (b0 + t * (b1 - b0))), 1e-300)); }, {tc});
    };
    const double ref11 = -a.length() * b.length() *
                         oracle::integrate01([&](double s) { return s * inner(s); },
                                             {oracle::closest_param(b0, a0, a1), oracle::closest_param(b1, a0, a1)}) /
                         (2 * std::numbers::pi);
    INFO("pair " << i);
    CHECK(std::abs(blk[1][1] - ref11) < 1e-10 * a.length() * b.length());
  }
  // reversed orientation of a coincident panel swaps the shape functions
  const Segment s({0, 0}, {0.3, 0.1}), r({0.3, 0.1}, {0, 0});
  const auto same = abem::slp_linear_block_laplace(s, s);
  const auto rev = abem::slp_linear_block_laplace(s, r);
  CHECK(same[0][0] == rel(rev[0][1]));
  CHECK(same[0][1] == rel(rev[0][0]));
}

TEST_CASE("laplace entry rejects bad input") {
  CHECK_THROWS_AS(Segment({0, 0}, {0, 0}), std::invalid_argument);
  const Segment a({0, 0}, {1, 0});
  CHECK_THROWS_AS(abem::slp_entry_laplace(a, a, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(abem::Wavenumber(0.0), std::invalid_argument);
  CHECK_THROWS_AS(abem::Wavenumber(-1.0), std::invalid_argument);
}

TEST_CASE("hankel h0") {
  const auto h1 = abem::hankel_h0(1.0);
  CHECK(h1.real() == rel(0.76519769).epsilon(1e-8));
  CHECK(h1.imag() == rel(0.08825696).epsilon(1e-7));
  CHECK_THROWS_AS(abem::hankel_h0(0.0), std::invalid_argument);
  CHECK_THROWS_AS(abem::hankel_h0(-2.0), std::invalid_argument);

  double worst = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double x = 100.0 * i / 2000.0 - 0.013 * (i % 7);
    const auto ref = oracle::bessel_series_mp(x);
    const auto h = abem::hankel_h0(x);
    worst = std::max({worst, std::abs(h.real() - ref.j0), std::abs(h.imag() - ref.y0)});
  }
  CHECK(worst < 1e-10);

  // both branches agree at the seam
  const double seam = abem::kHankelSeriesLimit;
  const auto below = abem::hankel_h0(std::nextafter(seam, 0.0));
  const auto above = abem::hankel_h0(std::nextafter(seam, 100.0));
  CHECK(std::abs(below - above) < 1e-10);

  // Boost as an independent cross-check
  for (double x : {1e-6, 0.3, 2.5, 11.9, 12.1, 37.0, 99.5}) {
    const auto h = abem::hankel_h0(x);
    CHECK(std::abs(h.real() - boost::math::cyl_bessel_j(0, x)) < 1e-10);
    CHECK(std::abs(h.imag() - boost::math::cyl_neumann(0, x)) < 1e-10);
  }
}

TEST_CASE("hankel small-argument logarithm") {
  double prev = 0.0;
  for (double x = 1e-2; x >= 1e-6; x /= 10) {
    const double d = abem::hankel_h0(x).imag() - 2.0 / std::numbers::pi * std::log(x);
    CHECK(std::abs(d) < 1.0);
    if (x < 1e-2) CHECK(std::abs(d - prev) < 1e-3);
    prev = d;
  }
}

TEST_CASE("bessel wronskian") {
  const double step = 1e-5;
  for (double x : {0.5, 1.0, 5.0}) {
    const auto c = abem::bessel_j0_y0(x);
    const auto p = abem::bessel_j0_y0(x + step), m = abem::bessel_j0_y0(x - step);
    const double dj = (p.j0 - m.j0) / (2 * step), dy = (p.y0 - m.y0) / (2 * step);
    CHECK(std::abs(c.j0 * dy - dj * c.y0 - 2.0 / (std::numbers::pi * x)) < 1e-9);
  }
}

TEST_CASE("helmholtz regular part continuity") {
  const double kappa = 1.7;
  const auto r0 = abem::helmholtz_regular_part(kappa, 0.0);
  const auto r1 = abem::helmholtz_regular_part(kappa, 1e-9);
  CHECK(std::abs(r0 - r1) < 1e-12);
  for (double r : {1e-3, 0.4, 3.0, 20.0}) {
    const auto ref = oracle::bessel_series_mp(kappa * r);
    const std::complex<double> g(-0.25 * ref.y0, 0.25 * ref.j0);
    const auto got = abem::helmholtz_regular_part(kappa, r) - std::log(r) / (2 * std::numbers::pi);
    CHECK(std::abs(got - g) < 1e-11);
  }
}

TEST_CASE("helmholtz entries") {
  const abem::Wavenumber k1(1.0);
  // coincident panel of length 0.4 against brute-force quadrature of the
  // remainder, with the log part from the closed form
  {
    const Segment s({-0.2, 0.0}, {0.2, 0.0});
    const auto got = abem::slp_entry_helmholtz(s, s, k1);
    const double lap = abem::slp_coincident_laplace(0.4);
    const double re = oracle::double_integral(s, s, [](double r) {
      return oracle::helmholtz_remainder(1.0, r).real();
    });
    const double im = oracle::double_integral(s, s, [](double r) {
      return oracle::helmholtz_remainder(1.0, r).imag();
    });
    CHECK(std::abs(got.real() - (lap + re)) < 1e-8);
    CHECK(std::abs(got.imag() - im) < 1e-8);
  }
  // tiny wavenumber tends to the Laplace entry plus the constant offset
  {
    const abem::Wavenumber tiny(1e-3);
    const Segment a({0, 0}, {1, 0}), b({0, 1}, {1, 1});
    const auto h = abem::slp_entry_helmholtz(a, b, tiny);
    const auto offset = abem::helmholtz_regular_part(1e-3, 0.0);
    CHECK(std::abs(h - abem::slp_entry_laplace(a, b) - offset) <= 0.01);
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto [a, b] = testing_util::random_pair(rng, i);
    const abem::Wavenumber k(0.5 + (i % 5));
    const auto ab = abem::slp_entry_helmholtz(a, b, k);
    CHECK(ab == abem::slp_entry_helmholtz(b, a, k));
    CHECK(ab.imag() != 0.0);
    if (i < 20) {
      const double re = oracle::double_integral(a, b, [&](double r) {
        return oracle::helmholtz_remainder(k.value(), r).real();
      });
      const double im = oracle::double_integral(a, b, [&](double r) {
        return oracle::helmholtz_remainder(k.value(), r).imag();
      });
      INFO("pair " << i);
      CHECK(std::abs(ab.real() - abem::slp_entry_laplace(a, b) - re) < 1e-10 * a.length() * b.length());
      CHECK(std::abs(ab.imag() - im) < 1e-10 * a.length() * b.length());
    }
  }
}

TEST_CASE("helmholtz linear blocks") {
  std::mt19937_64 rng(13);
  const abem::Wavenumber k(2.0);
  for (int i = 0; i < 20; ++i) {
    const auto [a, b] = testing_util::random_pair(rng, i);
    const auto blk = abem::slp_linear_block_helmholtz(a, b, k);
    const auto swapped = abem::slp_linear_block_helmholtz(b, a, k);
    std::complex<double> total = 0.0;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        total += blk[p][q];
        CHECK(std::abs(blk[p][q] - swapped[q][p]) < 1e-13 * a.length() * b.length());
      }
    INFO("pair " << i);
    CHECK(std::abs(total - abem::slp_entry_helmholtz(a, b, k)) < 1e-10 * a.length() * b.length());
  }
  // coincident block, imaginary part against a product rule of the smooth J_0
  const Segment s({0, 0}, {0.3, 0.4});
  const auto blk = abem::slp_linear_block_helmholtz(s, s, k);
  double ref = 0.0;
  const auto& g = abem::gauss_legendre(20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double si = 0.5 * (1 + g.nodes[i]), tj = 0.5 * (1 + g.nodes[j]);
      ref += 0.25 * g.weights[i] * g.weights[j] * (1 - si) * tj * 0.25 *
             boost::math::cyl_bessel_j(0, 2.0 * 0.5 * std::abs(si - tj));
    }
  ref *= 0.25;  // |s|^2
  CHECK(std::abs(blk[0][1].imag() - ref) < 1e-12);
}
