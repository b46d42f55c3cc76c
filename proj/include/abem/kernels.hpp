#pragma once

#include <array>
#include <complex>

namespace abem {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point, Point) = default;
};

double dot(Point a, Point b);
double cross(Point a, Point b);
double norm(Point a);

/// Straight boundary panel.
class Segment {
 public:
  /// Throws std::invalid_argument for a zero-length segment.
  Segment(Point start, Point end);
  /// Uses a caller-supplied length (e.g. exact dyadic arc length); it must agree
  /// with the endpoint distance up to rounding.
  Segment(Point start, Point end, double length);

  Point start() const { return start_; }
  Point end() const { return end_; }
  double length() const { return length_; }
  /// Unit tangent.
  Point direction() const { return dir_; }
  Point at(double arc) const { return start_ + arc * dir_; }

 private:
  Point start_, end_, dir_;
  double length_;
};

class Wavenumber {
 public:
  explicit Wavenumber(double kappa);
  double value() const { return kappa_; }

 private:
  double kappa_;
};

inline constexpr double kDefaultKernelTol = 1e-12;

template <class T>
using Block2 = std::array<std::array<T, 2>, 2>;

/// Galerkin entry of the Laplace single layer with kernel -(1/2pi) log|x - y|
/// over a x b. Coincident and collinear panels use closed forms; all other
/// pairs use Gauss rules whose order and subdivision are chosen from the
/// panel separation so that the error is below tol * |a| |b|.
double slp_entry_laplace(const Segment& a, const Segment& b, double tol = kDefaultKernelTol);

/// Closed form for a = b with |a| = h: -h^2 (log h - 3/2) / (2 pi).
double slp_coincident_laplace(double h);

/// Closed form of -(1/2pi) int_{a0}^{a1} int_{b0}^{b1} log|s - t| dt ds for
/// intervals on a common line. Overlapping intervals are supported.
double slp_collinear_laplace(double a0, double a1, double b0, double b1);

/// Galerkin entry of the Helmholtz single layer with kernel (i/4) H_0^{(1)}(kappa|x - y|).
std::complex<double> slp_entry_helmholtz(const Segment& a, const Segment& b, Wavenumber kappa,
                                         double tol = kDefaultKernelTol);

/// Entries against the linear shape functions (1 - s/|a|, s/|a|) on a and
/// (1 - t/|b|, t/|b|) on b, where s, t are arc lengths from the panel starts.
/// block[p][q] pairs shape p of a with shape q of b.
Block2<double> slp_linear_block_laplace(const Segment& a, const Segment& b,
                                        double tol = kDefaultKernelTol);
Block2<std::complex<double>> slp_linear_block_helmholtz(const Segment& a, const Segment& b,
                                                        Wavenumber kappa,
                                                        double tol = kDefaultKernelTol);

}  // namespace abem
