#include "abem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abem {

Geometry::Geometry(std::vector<Point> vertices, bool closed) : vertices_(std::move(vertices)), closed_(closed) {
  if (closed_ && vertices_.size() > 1 && vertices_.front() == vertices_.back()) vertices_.pop_back();
  if (vertices_.size() < (closed_ ? 3u : 2u))
    throw std::invalid_argument(closed_ ? "Geometry: a closed polygon needs at least 3 vertices"
                                        : "Geometry: a polyline needs at least 2 vertices");
  for (const Point& p : vertices_)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("Geometry: non-finite vertex");

  const double diam = diameter();
  if (diam >= 1.0) {
    scale_ = 0.8 / diam;
    for (Point& p : vertices_) p = scale_ * p;
  }

  const std::size_t n = closed_ ? vertices_.size() : vertices_.size() - 1;
  for (std::size_t e = 0; e < n; ++e) {
    const Point d = vertices_[(e + 1) % vertices_.size()] - vertices_[e];
    const double len = norm(d);
    if (!(len > 0.0)) throw std::invalid_argument("Geometry: consecutive vertices coincide at vertex " + std::to_string(e));
    arc_start_.push_back(total_length_);
    edge_length_.push_back(len);
    edge_dir_.push_back((1.0 / len) * d);
    total_length_ += len;
  }
}

double Geometry::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    for (std::size_t j = i + 1; j < vertices_.size(); ++j) d = std::max(d, norm(vertices_[i] - vertices_[j]));
  return d;
}

int Geometry::shared_vertex(int e, int f) const {
  if (e == f) return -1;
  const int nv = static_cast<int>(vertices_.size());
  if ((e + 1) % nv == f && (closed_ || e + 1 < nv)) return f;
  if ((f + 1) % nv == e && (closed_ || f + 1 < nv)) return e;
  return -1;
}

namespace {

// Distance from the edge start to position m/den, and from the edge end.
double from_start(const Geometry& g, const EdgePiece& p, std::uint64_t m) {
  return static_cast<double>(static_cast<long double>(g.edge_length(p.edge)) * m / p.den);
}
double from_end(const Geometry& g, const EdgePiece& p, std::uint64_t m) {
  return static_cast<double>(static_cast<long double>(g.edge_length(p.edge)) * (p.den - m) / p.den);
}

// True when the piece sits closer to the edge start than to its end.
bool near_start(const EdgePiece& p) {
  return static_cast<long double>(p.m0) + p.m1 <= static_cast<long double>(p.den);
}

}  // namespace

Segment panel(const Geometry& g, const EdgePiece& p) {
  const Point dir = g.edge_direction(p.edge);
  if (near_start(p)) {
    const Point o = g.edge_start(p.edge);
    return Segment(o + from_start(g, p, p.m0) * dir, p.m1 == p.den ? g.edge_end(p.edge) : o + from_start(g, p, p.m1) * dir,
                   p.length);
  }
  const Point o = g.edge_end(p.edge);
  return Segment(p.m0 == 0 ? g.edge_start(p.edge) : o - from_end(g, p, p.m0) * dir, o - from_end(g, p, p.m1) * dir,
                 p.length);
}

std::pair<Segment, Segment> panel_pair(const Geometry& g, const EdgePiece& a, const EdgePiece& b) {
  if (a.edge == b.edge) {
    // One-dimensional frame along the edge.
    const bool start = static_cast<long double>(a.m0) / a.den + static_cast<long double>(a.m1) / a.den +
                           static_cast<long double>(b.m0) / b.den + static_cast<long double>(b.m1) / b.den <=
                       2.0L;
    auto place = [&](const EdgePiece& p) {
      if (start) return Segment(Point{from_start(g, p, p.m0), 0.0}, Point{from_start(g, p, p.m1), 0.0}, p.length);
      return Segment(Point{-from_end(g, p, p.m0), 0.0}, Point{-from_end(g, p, p.m1), 0.0}, p.length);
    };
    return {place(a), place(b)};
  }
  const int v = g.shared_vertex(a.edge, b.edge);
  if (v >= 0) {
    auto place = [&](const EdgePiece& p) {
      const Point dir = g.edge_direction(p.edge);
      if (p.edge == v)  // edge starts at the shared vertex
        return Segment(from_start(g, p, p.m0) * dir, from_start(g, p, p.m1) * dir, p.length);
      return Segment(-from_end(g, p, p.m0) * dir, -from_end(g, p, p.m1) * dir, p.length);
    };
    return {place(a), place(b)};
  }
  return {panel(g, a), panel(g, b)};
}

}  // namespace abem
