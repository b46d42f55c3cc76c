#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "abem/geometry.hpp"

namespace abem {

/// Stable element identifier. It encodes the root element of the initial
/// mesh and the position inside the binary bisection tree of that root, so
/// the same geometric element always carries the same id:
///   id = (root + 1) << 56 | (1 << generation | index).
using ElementId = std::uint64_t;

inline constexpr int kMaxGeneration = 50;

ElementId make_element_id(int root, int generation, std::uint64_t index);
int id_root(ElementId id);
int id_generation(ElementId id);
std::uint64_t id_index(ElementId id);
/// Parent in the bisection tree; 0 for a root element.
ElementId id_parent(ElementId id);
/// First and second child.
ElementId id_child(ElementId id, int which);

/// The initial mesh T_0: roots along the boundary, in arc-length order.
struct InitialMesh {
  struct Root {
    int edge;
    std::uint64_t slot;   // position of the root within its edge
    std::uint64_t slots;  // number of roots on that edge
    double length;
    double t_start;
  };
  std::shared_ptr<const Geometry> geometry;
  std::vector<Root> roots;
};

struct Element {
  ElementId id;
  int root;
  int generation;
  std::uint64_t index;  // position among the 2^generation descendants of the root
  double t_start;       // arc length
  double t_end;
  double length;

  ElementId parent_id() const { return id_parent(id); }
};

/// Ordered partition of the boundary into bisection-tree leaves.
/// Meshes are immutable values; all refinement operations return new meshes.
class Mesh {
 public:
  /// Builds a mesh from leaves; validates that they tile every root.
  Mesh(std::shared_ptr<const InitialMesh> initial, std::vector<ElementId> leaves);

  const Geometry& geometry() const { return *initial_->geometry; }
  const std::shared_ptr<const InitialMesh>& initial() const { return initial_; }
  std::span<const Element> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  const Element& operator[](std::size_t i) const { return elements_[i]; }

  /// Index of the element with this id, or -1.
  std::ptrdiff_t find(ElementId id) const;
  bool contains(ElementId id) const { return find(id) >= 0; }

  /// Elements i - 1 and i + 1 along the boundary (wrapping for closed
  /// polygons); -1 where there is no neighbour.
  std::ptrdiff_t prev(std::size_t i) const;
  std::ptrdiff_t next(std::size_t i) const;

  EdgePiece piece(std::size_t i) const;
  Segment panel(std::size_t i) const { return abem::panel(geometry(), piece(i)); }

  std::vector<ElementId> ids() const;
  bool operator==(const Mesh& other) const;

 private:
  std::shared_ptr<const InitialMesh> initial_;
  std::vector<Element> elements_;
  std::unordered_map<ElementId, std::size_t> index_;
};

/// Exact edge piece of an element given by id.
EdgePiece element_piece(const InitialMesh& initial, ElementId id);

/// Initial mesh with n0 elements, each inside one edge; every vertex is an
/// element endpoint. Extra elements go to the edges with the longest pieces.
Mesh make_initial_mesh(std::shared_ptr<const Geometry> geometry, int n0);

/// Bisects every marked element once and closes the mesh so that neighbours
/// differ by at most one generation. Throws std::invalid_argument for ids not
/// in the mesh and std::length_error beyond kMaxGeneration.
Mesh refine(const Mesh& mesh, std::span<const ElementId> marked);
Mesh uniform_refine(const Mesh& mesh);

/// Coarsest common refinement of two meshes with the same initial mesh.
Mesh overlay(const Mesh& a, const Mesh& b);

/// True when the bisection forest of `fine` contains that of `coarse`.
bool is_refinement_of(const Mesh& fine, const Mesh& coarse);

/// Adjacent generations differ by at most one.
bool is_admissible(const Mesh& mesh);

struct MeshStats {
  std::size_t count;
  double min_length;
  double max_length;
  double ratio;  // max length ratio over touching elements
};
MeshStats mesh_stats(const Mesh& mesh);

/// One line per element: "id parent_id generation t_start t_end".
void dump_mesh(std::ostream& out, const Mesh& mesh);

/// All admissible meshes reachable from T_0 with at most n_extra additional
/// elements, in a deterministic order.
std::vector<Mesh> enumerate_admissible(const Mesh& initial, int n_extra);

}  // namespace abem
