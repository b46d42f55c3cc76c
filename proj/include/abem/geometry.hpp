#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "abem/kernels.hpp"

namespace abem {

/// Polygonal boundary: an open polyline or a closed polygon. Coordinates are
/// rescaled on construction so that the vertex set has diameter < 1.
class Geometry {
 public:
  /// For a closed polygon the first vertex must not be repeated at the end
  /// (a repeated closing vertex is dropped). Throws std::invalid_argument on
  /// too few or repeated consecutive vertices.
  Geometry(std::vector<Point> vertices, bool closed);

  std::span<const Point> vertices() const { return vertices_; }
  bool closed() const { return closed_; }
  int num_edges() const { return static_cast<int>(edge_length_.size()); }

  Point edge_start(int e) const { return vertices_[e]; }
  Point edge_end(int e) const { return vertices_[(e + 1) % vertices_.size()]; }
  double edge_length(int e) const { return edge_length_[e]; }
  Point edge_direction(int e) const { return edge_dir_[e]; }
  /// Arc length at the start of edge e.
  double edge_arc_start(int e) const { return arc_start_[e]; }
  double total_length() const { return total_length_; }

  /// Factor applied to the input coordinates (1 when no rescaling was needed).
  double scale() const { return scale_; }
  double diameter() const;
  /// True for a single straight edge.
  bool straight() const { return !closed_ && num_edges() == 1; }

  /// The vertex shared by edges e and f, or -1.
  int shared_vertex(int e, int f) const;

 private:
  std::vector<Point> vertices_;
  bool closed_;
  double scale_ = 1.0;
  std::vector<double> edge_length_;
  std::vector<Point> edge_dir_;
  std::vector<double> arc_start_;
  double total_length_ = 0.0;
};

/// A sub-interval of an edge given by exact rational positions m0/den and
/// m1/den of the edge length, together with its exact length.
struct EdgePiece {
  int edge;
  std::uint64_t m0, m1, den;
  double length;
};

/// Panel in absolute coordinates.
Segment panel(const Geometry& g, const EdgePiece& p);

/// Both panels of a pair in a common frame anchored where they are close:
/// pieces of one edge are laid out on the x-axis measured from the nearer
/// edge end, pieces of two edges sharing a vertex are placed relative to that
/// vertex. Relative positions are then exact up to a rounding of each offset,
/// which matters for strongly graded meshes.
std::pair<Segment, Segment> panel_pair(const Geometry& g, const EdgePiece& a, const EdgePiece& b);

}  // namespace abem
