#include "abem/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

namespace abem {

namespace {

constexpr std::uint64_t kHeapMask = (std::uint64_t{1} << 56) - 1;

// Position of the element start inside its root on the finest dyadic grid.
std::uint64_t start_key(int generation, std::uint64_t index) { return index << (kMaxGeneration - generation); }
std::uint64_t end_key(int generation, std::uint64_t index) { return (index + 1) << (kMaxGeneration - generation); }

struct Key {
  int root;
  std::uint64_t pos;
  auto operator<=>(const Key&) const = default;
};

Key key_start(ElementId id) { return {id_root(id), start_key(id_generation(id), id_index(id))}; }
Key key_end(ElementId id) { return {id_root(id), end_key(id_generation(id), id_index(id))}; }

std::string id_string(ElementId id) { return std::to_string(id); }

}  // namespace

ElementId make_element_id(int root, int generation, std::uint64_t index) {
  if (root < 0 || root >= 255) throw std::invalid_argument("element id: root out of range");
  if (generation < 0 || generation > kMaxGeneration) throw std::length_error("element id: generation limit exceeded");
  if (index >= (std::uint64_t{1} << generation)) throw std::invalid_argument("element id: index out of range");
  return (static_cast<std::uint64_t>(root + 1) << 56) | (std::uint64_t{1} << generation) | index;
}

int id_root(ElementId id) { return static_cast<int>(id >> 56) - 1; }
int id_generation(ElementId id) { return std::bit_width(id & kHeapMask) - 1; }
std::uint64_t id_index(ElementId id) {
  const int g = id_generation(id);
  return (id & kHeapMask) ^ (std::uint64_t{1} << g);
}
ElementId id_parent(ElementId id) {
  const std::uint64_t heap = id & kHeapMask;
  if (heap <= 1) return 0;
  return (id & ~kHeapMask) | (heap >> 1);
}
ElementId id_child(ElementId id, int which) {
  const std::uint64_t heap = id & kHeapMask;
  return (id & ~kHeapMask) | (heap << 1) | static_cast<std::uint64_t>(which & 1);
}

EdgePiece element_piece(const InitialMesh& initial, ElementId id) {
  const InitialMesh::Root& r = initial.roots.at(id_root(id));
  const int g = id_generation(id);
  const std::uint64_t m0 = (r.slot << g) + id_index(id);
  return {r.edge, m0, m0 + 1, r.slots << g, std::ldexp(r.length, -g)};
}

Mesh::Mesh(std::shared_ptr<const InitialMesh> initial, std::vector<ElementId> leaves) : initial_(std::move(initial)) {
  if (!initial_ || !initial_->geometry) throw std::invalid_argument("Mesh: missing initial mesh");
  std::sort(leaves.begin(), leaves.end(), [](ElementId a, ElementId b) { return key_start(a) < key_start(b); });
  const int nroots = static_cast<int>(initial_->roots.size());
  Key expect{0, 0};
  elements_.reserve(leaves.size());
  for (ElementId id : leaves) {
    const int r = id_root(id);
    if (r < 0 || r >= nroots) throw std::invalid_argument("Mesh: element " + id_string(id) + " has an unknown root");
    if (expect.pos == end_key(0, 0)) expect = {expect.root + 1, 0};
    if (key_start(id) != expect) throw std::invalid_argument("Mesh: elements do not tile the boundary at " + id_string(id));
    expect = key_end(id);
    const InitialMesh::Root& root = initial_->roots[r];
    const int g = id_generation(id);
    const std::uint64_t k = id_index(id);
    const double scale = std::ldexp(root.length, -g);
    Element e{id, r, g, k, root.t_start + scale * static_cast<double>(k), root.t_start + scale * static_cast<double>(k + 1),
              scale};
    elements_.push_back(e);
  }
  if (!(expect.root == nroots - 1 && expect.pos == end_key(0, 0)))
    throw std::invalid_argument("Mesh: elements do not cover the boundary");
  index_.reserve(elements_.size());
  for (std::size_t i = 0; i < elements_.size(); ++i) index_.emplace(elements_[i].id, i);
}

std::ptrdiff_t Mesh::find(ElementId id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::ptrdiff_t Mesh::prev(std::size_t i) const {
  if (i > 0) return static_cast<std::ptrdiff_t>(i) - 1;
  return geometry().closed() && size() > 1 ? static_cast<std::ptrdiff_t>(size()) - 1 : -1;
}

std::ptrdiff_t Mesh::next(std::size_t i) const {
  if (i + 1 < size()) return static_cast<std::ptrdiff_t>(i) + 1;
  return geometry().closed() && size() > 1 ? 0 : -1;
}

EdgePiece Mesh::piece(std::size_t i) const { return element_piece(*initial_, elements_[i].id); }

std::vector<ElementId> Mesh::ids() const {
  std::vector<ElementId> out;
  out.reserve(size());
  for (const Element& e : elements_) out.push_back(e.id);
  return out;
}

bool Mesh::operator==(const Mesh& other) const {
  if (initial_ != other.initial_ || size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (elements_[i].id != other.elements_[i].id) return false;
  return true;
}

Mesh make_initial_mesh(std::shared_ptr<const Geometry> geometry, int n0) {
  if (!geometry) throw std::invalid_argument("make_initial_mesh: missing geometry");
  const int ne = geometry->num_edges();
  const int needed = geometry->closed() ? std::max(3, ne) : ne;
  if (n0 < needed)
    throw std::invalid_argument("make_initial_mesh: n0 = " + std::to_string(n0) + " cannot honour the " +
                                std::to_string(ne) + " edges of the geometry (need at least " + std::to_string(needed) +
                                ")");
  std::vector<std::uint64_t> per_edge(ne, 1);
  for (int extra = n0 - ne; extra > 0; --extra) {
    int best = 0;
    for (int e = 1; e < ne; ++e)
      if (geometry->edge_length(e) / per_edge[e] > geometry->edge_length(best) / per_edge[best]) best = e;
    ++per_edge[best];
  }
  auto initial = std::make_shared<InitialMesh>();
  initial->geometry = geometry;
  for (int e = 0; e < ne; ++e) {
    const double len = geometry->edge_length(e) / static_cast<double>(per_edge[e]);
    for (std::uint64_t j = 0; j < per_edge[e]; ++j)
      initial->roots.push_back({e, j, per_edge[e], len,
                                geometry->edge_arc_start(e) + geometry->edge_length(e) * static_cast<double>(j) /
                                                                  static_cast<double>(per_edge[e])});
  }
  if (initial->roots.size() >= 255) throw std::invalid_argument("make_initial_mesh: too many initial elements");
  std::vector<ElementId> leaves;
  for (std::size_t r = 0; r < initial->roots.size(); ++r) leaves.push_back(make_element_id(static_cast<int>(r), 0, 0));
  return Mesh(std::move(initial), std::move(leaves));
}

Mesh refine(const Mesh& mesh, std::span<const ElementId> marked) {
  const std::size_t n = mesh.size();
  std::vector<char> bisect(n, 0);
  std::vector<std::size_t> work;
  for (ElementId id : marked) {
    const std::ptrdiff_t i = mesh.find(id);
    if (i < 0) throw std::invalid_argument("refine: element " + id_string(id) + " is not in the mesh");
    work.push_back(static_cast<std::size_t>(i));
  }
  // Bisecting i puts generation g + 1 next to its neighbours; a neighbour of
  // generation g - 1 must then be bisected as well.
  while (!work.empty()) {
    const std::size_t i = work.back();
    work.pop_back();
    if (bisect[i]) continue;
    if (mesh[i].generation >= kMaxGeneration) throw std::length_error("refine: generation limit exceeded");
    bisect[i] = 1;
    for (const std::ptrdiff_t nb : {mesh.prev(i), mesh.next(i)})
      if (nb >= 0 && !bisect[nb] && mesh[nb].generation < mesh[i].generation) work.push_back(static_cast<std::size_t>(nb));
  }
  std::vector<ElementId> leaves;
  leaves.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bisect[i]) {
      leaves.push_back(id_child(mesh[i].id, 0));
      leaves.push_back(id_child(mesh[i].id, 1));
    } else {
      leaves.push_back(mesh[i].id);
    }
  }
  return Mesh(mesh.initial(), std::move(leaves));
}

Mesh uniform_refine(const Mesh& mesh) {
  const std::vector<ElementId> all = mesh.ids();
  return refine(mesh, all);
}

Mesh overlay(const Mesh& a, const Mesh& b) {
  if (a.initial() != b.initial())
    throw std::invalid_argument("overlay: meshes come from different initial meshes");
  std::vector<ElementId> leaves;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Key ea = key_end(a[i].id), eb = key_end(b[j].id);
    if (ea == eb) {
      leaves.push_back(a[i].generation >= b[j].generation ? a[i].id : b[j].id);
      ++i;
      ++j;
    } else if (ea < eb) {
      leaves.push_back(a[i++].id);
    } else {
      leaves.push_back(b[j++].id);
    }
  }
  return Mesh(a.initial(), std::move(leaves));
}

bool is_refinement_of(const Mesh& fine, const Mesh& coarse) {
  if (fine.initial() != coarse.initial()) return false;
  for (const Element& e : fine.elements()) {
    ElementId id = e.id;
    while (id != 0 && !coarse.contains(id)) id = id_parent(id);
    if (id == 0) return false;
  }
  return true;
}

bool is_admissible(const Mesh& mesh) {
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const std::ptrdiff_t nb = mesh.next(i);
    if (nb >= 0 && std::abs(mesh[i].generation - mesh[nb].generation) > 1) return false;
  }
  return true;
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s{mesh.size(), mesh[0].length, mesh[0].length, 1.0};
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    s.min_length = std::min(s.min_length, mesh[i].length);
    s.max_length = std::max(s.max_length, mesh[i].length);
    const std::ptrdiff_t nb = mesh.next(i);
    if (nb >= 0 && static_cast<std::size_t>(nb) != i) {
      const double a = mesh[i].length, b = mesh[nb].length;
      s.ratio = std::max(s.ratio, std::max(a, b) / std::min(a, b));
    }
  }
  return s;
}

void dump_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old = out.precision(17);
  for (const Element& e : mesh.elements())
    out << e.id << ' ' << e.parent_id() << ' ' << e.generation << ' ' << e.t_start << ' ' << e.t_end << '\n';
  out.precision(old);
}

std::vector<Mesh> enumerate_admissible(const Mesh& initial, int n_extra) {
  if (n_extra < 0) throw std::invalid_argument("enumerate_admissible: negative budget");
  // Every admissible mesh is reached through single bisections that need no
  // closure: undoing the bisection of a deepest sibling pair keeps a mesh
  // admissible, so induction on the element count reaches T_0.
  std::vector<Mesh> out{initial};
  std::vector<Mesh> frontier{initial};
  for (int level = 0; level < n_extra; ++level) {
    std::set<std::vector<ElementId>> seen;
    std::vector<Mesh> next;
    for (const Mesh& m : frontier) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const int g = m[i].generation;
        if (g >= kMaxGeneration) continue;
        const std::ptrdiff_t p = m.prev(i), q = m.next(i);
        if ((p >= 0 && m[p].generation < g) || (q >= 0 && m[q].generation < g)) continue;
        std::vector<ElementId> leaves = m.ids();
        leaves[i] = id_child(m[i].id, 0);
        leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(i) + 1, id_child(m[i].id, 1));
        if (seen.insert(leaves).second) next.emplace_back(m.initial(), std::move(leaves));
      }
    }
    std::sort(next.begin(), next.end(), [](const Mesh& a, const Mesh& b) { return a.ids() < b.ids(); });
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace abem
