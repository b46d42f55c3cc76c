#include "abem/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "abem/quadrature.hpp"
#include "abem/special_functions.hpp"

namespace abem {

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a) { return std::hypot(a.x, a.y); }

Segment::Segment(Point start, Point end) : Segment(start, end, norm(end - start)) {}

Segment::Segment(Point start, Point end, double length)
    : start_(start), end_(end), length_(length) {
  if (!(length_ > 0.0) || !std::isfinite(length_))
    throw std::invalid_argument("Segment: degenerate (zero-length) panel");
  const double d = norm(end - start);
  // endpoints carry absolute rounding errors, which dominate for tiny panels
  const double slack = 1e-9 * length_ + 1e-14 * (std::abs(start.x) + std::abs(start.y) + std::abs(end.x) + std::abs(end.y));
  if (std::abs(d - length_) > slack)
    throw std::invalid_argument("Segment: length disagrees with endpoint distance");
  dir_ = (1.0 / d) * (end - start);
}

Wavenumber::Wavenumber(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("Wavenumber: kappa must be positive");
}

namespace {

constexpr double kInv2Pi = 0.5 / std::numbers::pi;
using cplx = std::complex<double>;

// A parameter interval [s0, s1] (arc length) of a panel.
struct Piece {
  const Segment* seg;
  double s0, s1;

  double length() const { return s1 - s0; }
  Point at(double s) const {
    if (s == 0.0) return seg->start();
    if (s == seg->length()) return seg->end();
    return seg->at(s);
  }
  Point p0() const { return at(s0); }
  Point p1() const { return at(s1); }
};

double point_piece_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = dot(p - a, ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

bool pieces_cross(Point a0, Point a1, Point b0, Point b1) {
  const double d1 = cross(a1 - a0, b0 - a0), d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0), d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double piece_distance(const Piece& a, const Piece& b) {
  const Point a0 = a.p0(), a1 = a.p1(), b0 = b.p0(), b1 = b.p1();
  if (pieces_cross(a0, a1, b0, b1)) return 0.0;
  return std::min({point_piece_distance(a0, b0, b1), point_piece_distance(a1, b0, b1),
                   point_piece_distance(b0, a0, a1), point_piece_distance(b1, a0, a1)});
}

// Smallest Gauss order whose Bernstein-ellipse error bound is below tol for a
// singularity at relative distance delta (distance over half-length) from the
// interval; 0 when no order up to 16 suffices. An n-point rule is exact to
// degree 2n - 1, so its bound is (64/15) rho^(2 - 2n) / (rho^2 - 1).
int gauss_order(double delta, double tol) {
  if (!(delta > 0.0)) return 0;
  const double rho = delta + std::sqrt(1.0 + delta * delta);
  const double c = (64.0 / 15.0) / (rho * rho - 1.0);
  static constexpr int kOrders[] = {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16};
  const double lr = std::log(rho);
  for (int n : kOrders)
    if (c * std::exp(-2.0 * (n - 1) * lr) <= tol) return n;
  return 0;
}

bool is_touching(double d, double la, double lb) { return d <= 1e-13 * (la + lb); }

// Mapped Gauss nodes on [a, b].
template <class F>
void for_gauss(int n, double a, double b, F&& f) {
  const GaussRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) f(mid + half * rule.nodes[i], half * rule.weights[i]);
}

// ---------------------------------------------------------------------------
// Separated pairs: tensor Gauss with recursive subdivision.
//
// kernel(r) returns the kernel value at distance r; sink(s, t, w, value)
// receives arc-length parameters, the combined weight and the kernel value.

template <class Kernel, class Sink>
void tensor_gauss(const Piece& a, int na, const Piece& b, int nb, Kernel&& kernel, Sink&& sink) {
  const GaussRule& ra = gauss_legendre(na);
  const GaussRule& rb = gauss_legendre(nb);
  const double ma = 0.5 * (a.s0 + a.s1), ha = 0.5 * a.length();
  const double mb = 0.5 * (b.s0 + b.s1), hb = 0.5 * b.length();
  const Point da = a.seg->direction(), db = b.seg->direction();
  const Point oa = a.seg->start(), ob = b.seg->start();
  for (int i = 0; i < na; ++i) {
    const double s = ma + ha * ra.nodes[i];
    const double wi = ha * ra.weights[i];
    const Point x = oa + s * da;
    for (int j = 0; j < nb; ++j) {
      const double t = mb + hb * rb.nodes[j];
      const Point y = ob + t * db;
      const Point z = x - y;
      sink(s, t, wi * hb * rb.weights[j], kernel(dot(z, z)));
    }
  }
}

template <class Kernel, class Sink>
void separated(const Piece& a, const Piece& b, double tol, Kernel&& kernel, Sink&& sink, int depth = 0) {
  const double d = piece_distance(a, b);
  const double la = a.length(), lb = b.length();
  const int na = gauss_order(2.0 * d / la, tol);
  const int nb = gauss_order(2.0 * d / lb, tol);
  if ((na > 0 && nb > 0) || depth > 60) {
    tensor_gauss(a, na > 0 ? na : 16, b, nb > 0 ? nb : 16, kernel, sink);
    return;
  }
  const bool split_a = (na == 0 && nb == 0) ? la >= lb : na == 0;
  if (split_a) {
    const double m = 0.5 * (a.s0 + a.s1);
    separated(Piece{a.seg, a.s0, m}, b, tol, kernel, sink, depth + 1);
    separated(Piece{a.seg, m, a.s1}, b, tol, kernel, sink, depth + 1);
  } else {
    const double m = 0.5 * (b.s0 + b.s1);
    separated(a, Piece{b.seg, b.s0, m}, tol, kernel, sink, depth + 1);
    separated(a, Piece{b.seg, m, b.s1}, tol, kernel, sink, depth + 1);
  }
}

// ---------------------------------------------------------------------------
// Log kernel with the inner integral in closed form.

struct LogMoments {
  double m0;  // int_0^L log|x - y(t)| dt
  double m1;  // int_0^L t log|x - y(t)| dt
};

LogMoments log_moments(Point x, const Segment& q, bool want_first) {
  const Point rel = x - q.start();
  const Point d = q.direction();
  const double xi = dot(rel, d);
  const double eta = std::abs(cross(d, rel));
  const double u1 = -xi, u2 = q.length() - xi;
  auto a0 = [eta](double u) {
    if (eta == 0.0) return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u;
    return 0.5 * u * std::log(u * u + eta * eta) - u;
  };
  double m0 = a0(u2) - a0(u1);
  if (eta > 0.0) m0 += eta * std::atan2(eta * (u2 - u1), eta * eta + u1 * u2);
  double m1 = 0.0;
  if (want_first) {
    auto a1 = [eta](double u) {
      const double r2 = u * u + eta * eta;
      return r2 == 0.0 ? 0.0 : 0.25 * r2 * std::log(r2) - 0.25 * u * u;
    };
    m1 = a1(u2) - a1(u1) + xi * m0;
  }
  return {m0, m1};
}

// Outer Gauss over a piece of the (smaller) panel, inner closed form over the
// whole panel q. Sub-intervals approaching a singular point are bisected.
// collinear: singularities of the outer integrand sit only at q's endpoints.
template <class Sink>
void outer_inner(const Piece& a, const Segment& q, bool collinear, bool want_first, double tol, double floor_len,
                 Sink&& sink, int depth = 0) {
  const double la = a.length();
  double d;
  if (collinear) {
    const Point a0 = a.p0(), a1 = a.p1();
    d = std::min(point_piece_distance(q.start(), a0, a1), point_piece_distance(q.end(), a0, a1));
  } else {
    d = piece_distance(a, Piece{&q, 0.0, q.length()});
  }
  int n = 0;
  if (!is_touching(d, la, q.length())) n = gauss_order(2.0 * d / la, tol);
  if (n == 0 && (la <= floor_len || depth > 80)) n = 16;
  if (n > 0) {
    for_gauss(n, a.s0, a.s1, [&](double s, double w) {
      const LogMoments mom = log_moments(a.at(s), q, want_first);
      sink(s, w, mom);
    });
    return;
  }
  const double m = 0.5 * (a.s0 + a.s1);
  outer_inner(Piece{a.seg, a.s0, m}, q, collinear, want_first, tol, floor_len, sink, depth + 1);
  outer_inner(Piece{a.seg, m, a.s1}, q, collinear, want_first, tol, floor_len, sink, depth + 1);
}

// Finest outer sub-interval next to a log singularity: the neglected part of
// the Gauss error there scales like len^2 (1 + |log len|).
double log_floor(double tol, double la, double lb) { return 0.1 * std::sqrt(tol * la * lb); }

// ---------------------------------------------------------------------------
// Panel-pair relations.

struct Relation {
  bool coincident = false;
  bool collinear = false;
  bool touching = false;
  double distance = 0.0;
  // Positions of b's endpoints along a's line when collinear.
  double b0 = 0.0, b1 = 0.0;
};

Relation classify(const Segment& a, const Segment& b) {
  Relation rel;
  const double la = a.length(), lb = b.length();
  const double scale = la + lb;
  const Point da = a.direction();
  const Point off0 = b.start() - a.start();
  const Point off1 = b.end() - a.start();
  const double span = scale + norm(off0);
  rel.collinear = std::abs(cross(da, b.direction())) <= 1e-12 && std::abs(cross(da, off0)) <= 1e-13 * span &&
                  std::abs(cross(da, off1)) <= 1e-13 * span;
  if (rel.collinear) {
    rel.b0 = dot(off0, da);
    rel.b1 = dot(off1, da);
  }
  const double e0 = norm(a.start() - b.start()) + norm(a.end() - b.end());
  const double e1 = norm(a.start() - b.end()) + norm(a.end() - b.start());
  rel.coincident = std::min(e0, e1) <= 1e-13 * scale;
  rel.distance = piece_distance(Piece{&a, 0.0, la}, Piece{&b, 0.0, lb});
  rel.touching = is_touching(rel.distance, la, lb);
  return rel;
}

double collinear_primitive(double x) { return x <= 0.0 ? 0.0 : 0.5 * x * x * std::log(x) - 0.75 * x * x; }

// int_{x0}^{x1} int_{y0}^{y1} log|s - t| for x1 <= y0.
double disjoint_collinear(double x0, double x1, double y0, double y1) {
  return collinear_primitive(y1 - x0) + collinear_primitive(y0 - x1) - collinear_primitive(y1 - x1) -
         collinear_primitive(y0 - x0);
}

double coincident_log(double h) { return h * h * (std::log(h) - 1.5); }

// Closed forms lose about log10(extent^2 / (la lb)) digits to cancellation.
bool collinear_closed_form_ok(const Relation& rel, double la, double lb) {
  const double lo = std::min({0.0, rel.b0, rel.b1});
  const double hi = std::max({la, rel.b0, rel.b1});
  const double extent = hi - lo;
  return extent * extent <= 1e4 * la * lb;
}

// Order a pair so that the first panel is the shorter one; ties are broken on
// coordinates so that swapping the arguments gives bitwise identical results.
bool swap_roles(const Segment& a, const Segment& b) {
  if (a.length() != b.length()) return a.length() > b.length();
  const Point pa = a.start(), pb = b.start();
  if (pa.x != pb.x) return pa.x > pb.x;
  if (pa.y != pb.y) return pa.y > pb.y;
  const Point qa = a.end(), qb = b.end();
  if (qa.x != qb.x) return qa.x > qb.x;
  return qa.y > qb.y;
}

// int int log|x - y| over a x b for a non-collinear or distant pair.
double generic_log_integral(const Segment& a, const Segment& b, const Relation& rel, double tol) {
  const double la = a.length(), lb = b.length();
  if (!rel.touching) {
    const int na = gauss_order(2.0 * rel.distance / la, tol);
    const int nb = gauss_order(2.0 * rel.distance / lb, tol);
    if (na > 0 && nb > 0) {
      double sum = 0.0;
      tensor_gauss(Piece{&a, 0.0, la}, na, Piece{&b, 0.0, lb}, nb, [](double r2) { return 0.5 * std::log(r2); },
                   [&sum](double, double, double w, double v) { sum += w * v; });
      return sum;
    }
  }
  double sum = 0.0;
  outer_inner(Piece{&a, 0.0, la}, b, rel.collinear, false, tol, log_floor(tol, la, lb),
              [&sum](double, double w, const LogMoments& m) { sum += w * m.m0; });
  return sum;
}

// ---------------------------------------------------------------------------
// Smooth Helmholtz remainder.

struct RegularKernel {
  double kappa;
  cplx operator()(double r2) const { return helmholtz_regular_part(kappa, std::sqrt(r2)); }
};

// Integrates g(u) over [0, h] with geometric grading toward u = 0, where g has
// a u^2 log u type singularity.
template <class G>
void graded_from_zero(double h, double tol, G&& g) {
  double hi = h;
  const double floor_len = h * 1e-5;
  const int n_outer = gauss_order(2.0, tol) > 0 ? gauss_order(2.0, tol) : 16;
  while (hi > floor_len) {
    const double lo = 0.5 * hi;
    for_gauss(n_outer, lo, hi, g);
    hi = lo;
  }
  for_gauss(16, 0.0, hi, g);
}

// Pair touching at a shared vertex. Sub-pieces next to the vertex are split
// until the remainder's r^2 log r variation is negligible there.
template <class Sink>
void touching_regular(const Piece& a, const Piece& b, const RegularKernel& k, double tol, double scale, Sink&& sink,
                      int depth = 0) {
  const double la = a.length(), lb = b.length();
  const double l = la + lb;
  const double var = k.kappa * k.kappa * l * l * (1.0 + std::abs(std::log(k.kappa * l)));
  if (var * la * lb <= tol * scale || depth > 50) {
    tensor_gauss(a, 8, b, 8, k, sink);
    return;
  }
  const double ma = 0.5 * (a.s0 + a.s1), mb = 0.5 * (b.s0 + b.s1);
  const Piece as[2] = {{a.seg, a.s0, ma}, {a.seg, ma, a.s1}};
  const Piece bs[2] = {{b.seg, b.s0, mb}, {b.seg, mb, b.s1}};
  for (const Piece& pa : as) {
    for (const Piece& pb : bs) {
      const double d = piece_distance(pa, pb);
      if (is_touching(d, pa.length(), pb.length()))
        touching_regular(pa, pb, k, tol, scale, sink, depth + 1);
      else
        separated(pa, pb, tol, k, sink);
    }
  }
}

template <class Sink>
void regular_pair(const Segment& a, const Segment& b, const Relation& rel, double kappa, double tol, Sink&& sink) {
  const RegularKernel k{kappa};
  const Piece pa{&a, 0.0, a.length()}, pb{&b, 0.0, b.length()};
  if (rel.touching)
    touching_regular(pa, pb, k, tol, a.length() * b.length(), sink);
  else
    separated(pa, pb, tol, k, sink);
}

double shape(int p, double s, double h) { return p == 0 ? 1.0 - s / h : s / h; }

}  // namespace

// ---------------------------------------------------------------------------

double slp_coincident_laplace(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("slp_coincident_laplace: degenerate panel");
  return -kInv2Pi * coincident_log(h);
}

double slp_collinear_laplace(double a0, double a1, double b0, double b1) {
  if (a0 > a1) std::swap(a0, a1);
  if (b0 > b1) std::swap(b0, b1);
  if (!(a1 > a0) || !(b1 > b0)) throw std::invalid_argument("slp_collinear_laplace: degenerate panel");
  std::vector<double> cuts{a0, a1, b0, b1};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  struct Interval {
    double lo, hi;
  };
  std::vector<Interval> pa, pb;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (lo >= a0 && hi <= a1) pa.push_back({lo, hi});
    if (lo >= b0 && hi <= b1) pb.push_back({lo, hi});
  }
  double sum = 0.0;
  for (const Interval& x : pa) {
    for (const Interval& y : pb) {
      if (x.lo == y.lo)
        sum += coincident_log(x.hi - x.lo);
      else if (x.hi <= y.lo)
        sum += disjoint_collinear(x.lo, x.hi, y.lo, y.hi);
      else
        sum += disjoint_collinear(y.lo, y.hi, x.lo, x.hi);
    }
  }
  return -kInv2Pi * sum;
}

double slp_entry_laplace(const Segment& a_in, const Segment& b_in, double tol) {
  if (!(tol >= 1e-14 && tol <= 1e-6)) throw std::invalid_argument("slp_entry_laplace: tol outside [1e-14, 1e-6]");
  const bool swapped = swap_roles(a_in, b_in);
  const Segment& a = swapped ? b_in : a_in;
  const Segment& b = swapped ? a_in : b_in;
  const Relation rel = classify(a, b);
  if (rel.coincident) return slp_coincident_laplace(a.length());
  if (rel.collinear && collinear_closed_form_ok(rel, a.length(), b.length()))
    return slp_collinear_laplace(0.0, a.length(), rel.b0, rel.b1);
  return -kInv2Pi * generic_log_integral(a, b, rel, tol);
}

std::complex<double> slp_entry_helmholtz(const Segment& a_in, const Segment& b_in, Wavenumber kappa, double tol) {
  const bool swapped = swap_roles(a_in, b_in);
  const Segment& a = swapped ? b_in : a_in;
  const Segment& b = swapped ? a_in : b_in;
  const double laplace = slp_entry_laplace(a, b, tol);
  const Relation rel = classify(a, b);
  const RegularKernel k{kappa.value()};
  cplx smooth = 0.0;
  if (rel.coincident) {
    // int int R(|s - t|) = 2 int_0^h (h - u) R(u) du
    const double h = a.length();
    graded_from_zero(h, tol, [&](double u, double w) { smooth += 2.0 * w * (h - u) * k(u * u); });
  } else {
    regular_pair(a, b, rel, kappa.value(), tol, [&smooth](double, double, double w, cplx v) { smooth += w * v; });
  }
  return laplace + smooth;
}

Block2<double> slp_linear_block_laplace(const Segment& a_in, const Segment& b_in, double tol) {
  if (!(tol >= 1e-14 && tol <= 1e-6))
    throw std::invalid_argument("slp_linear_block_laplace: tol outside [1e-14, 1e-6]");
  const bool swapped = swap_roles(a_in, b_in);
  const Segment& a = swapped ? b_in : a_in;
  const Segment& b = swapped ? a_in : b_in;
  const double la = a.length(), lb = b.length();
  const Relation rel = classify(a, b);
  Block2<double> blk{};
  if (rel.coincident) {
    // -(1/2pi) h^2 (log(h)/4 + c_pq) with c = [[-7/16, -5/16], [-5/16, -7/16]] on the unit panel.
    const double h = la;
    const bool same_orientation = norm(a.start() - b.start()) <= norm(a.start() - b.end());
    const double diag = -kInv2Pi * h * h * (0.25 * std::log(h) - 7.0 / 16.0);
    const double off = -kInv2Pi * h * h * (0.25 * std::log(h) - 5.0 / 16.0);
    blk = same_orientation ? Block2<double>{{{diag, off}, {off, diag}}} : Block2<double>{{{off, diag}, {diag, off}}};
  } else {
    bool tensor = false;
    if (!rel.touching) {
      const int na = gauss_order(2.0 * rel.distance / la, tol);
      const int nb = gauss_order(2.0 * rel.distance / lb, tol);
      if (na > 0 && nb > 0) {
        tensor = true;
        tensor_gauss(Piece{&a, 0.0, la}, na, Piece{&b, 0.0, lb}, nb, [](double r2) { return 0.5 * std::log(r2); },
                     [&](double s, double t, double w, double v) {
                       for (int p = 0; p < 2; ++p)
                         for (int q = 0; q < 2; ++q) blk[p][q] += w * v * shape(p, s, la) * shape(q, t, lb);
                     });
      }
    }
    if (!tensor) {
      outer_inner(Piece{&a, 0.0, la}, b, rel.collinear, true, tol, log_floor(tol, la, lb),
                  [&](double s, double w, const LogMoments& m) {
                    const double mu1 = m.m1 / lb;
                    const double mu0 = m.m0 - mu1;
                    for (int p = 0; p < 2; ++p) {
                      const double lam = w * shape(p, s, la);
                      blk[p][0] += lam * mu0;
                      blk[p][1] += lam * mu1;
                    }
                  });
    }
    for (auto& row : blk)
      for (double& v : row) v *= -kInv2Pi;
  }
  if (swapped) std::swap(blk[0][1], blk[1][0]);
  return blk;
}

Block2<std::complex<double>> slp_linear_block_helmholtz(const Segment& a_in, const Segment& b_in, Wavenumber kappa,
                                                        double tol) {
  const bool swapped = swap_roles(a_in, b_in);
  const Segment& a = swapped ? b_in : a_in;
  const Segment& b = swapped ? a_in : b_in;
  const double la = a.length(), lb = b.length();
  const Block2<double> lap = slp_linear_block_laplace(a, b, tol);
  const Relation rel = classify(a, b);
  const RegularKernel k{kappa.value()};
  Block2<cplx> blk{};
  if (rel.coincident) {
    // t = s + u: int int R(|s - t|) f(s) g(t) = int_{-h}^{h} R(|u|) W(u) du with
    // W(u) = int f(s) g(s + u) ds, a quadratic in s evaluated exactly by 2-point Gauss.
    const double h = la;
    const bool same_orientation = norm(a.start() - b.start()) <= norm(a.start() - b.end());
    auto gshape = [&](int q, double t) { return shape(q, same_orientation ? t : h - t, h); };
    graded_from_zero(h, tol, [&](double u, double w) {
      const cplx r = k(u * u);
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
          double wpq = 0.0;
          for_gauss(2, 0.0, h - u, [&](double s, double ws) { wpq += ws * shape(p, s, h) * gshape(q, s + u); });
          for_gauss(2, u, h, [&](double s, double ws) { wpq += ws * shape(p, s, h) * gshape(q, s - u); });
          blk[p][q] += w * r * wpq;
        }
      }
    });
  } else {
    regular_pair(a, b, rel, kappa.value(), tol, [&](double s, double t, double w, cplx v) {
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) blk[p][q] += w * v * shape(p, s, la) * shape(q, t, lb);
    });
  }
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) blk[p][q] += lap[p][q];
  if (swapped) std::swap(blk[0][1], blk[1][0]);
  return blk;
}

}  // namespace abem
