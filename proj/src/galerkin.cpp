#include "abem/galerkin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "abem/quadrature.hpp"

namespace abem {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::WeaksingLaplace: return "weaksing-laplace";
    case ProblemKind::WeaksingHelmholtz: return "weaksing-helmholtz";
    case ProblemKind::HypsingLaplace: return "hypsing-laplace";
    case ProblemKind::HypsingHelmholtzFlat: return "hypsing-helmholtz-flat";
  }
  return "?";
}

bool is_helmholtz(ProblemKind kind) {
  return kind == ProblemKind::WeaksingHelmholtz || kind == ProblemKind::HypsingHelmholtzFlat;
}

Family family_for(ProblemKind kind) {
  return kind == ProblemKind::WeaksingLaplace || kind == ProblemKind::WeaksingHelmholtz ? Family::P0 : Family::S1_0;
}

Rhs Rhs::constant(double value) {
  Rhs r;
  r.function = [value](Point) { return value; };
  return r;
}

Rhs Rhs::resolvable(std::shared_ptr<const Mesh> mesh, Eigen::VectorXd w) {
  if (!mesh || static_cast<std::size_t>(w.size()) != mesh->size())
    throw std::invalid_argument("Rhs::resolvable: density does not match its mesh");
  Rhs r;
  r.density_mesh = std::move(mesh);
  r.density = std::move(w);
  return r;
}

void ProblemSpec::validate() const {
  if (!geometry) throw std::invalid_argument("problem " + name + ": missing geometry");
  if (!initial_mesh || initial_mesh->initial()->geometry != geometry)
    throw std::invalid_argument("problem " + name + ": missing initial mesh");
  if (is_helmholtz(kind) != kappa.has_value())
    throw std::invalid_argument("problem " + name + ": a wavenumber is required exactly for Helmholtz kinds");
  if (family_for(kind) == Family::S1_0 && geometry->closed())
    throw std::invalid_argument("problem " + name + ": hypersingular problems need an open arc");
  if (kind == ProblemKind::HypsingHelmholtzFlat && !geometry->straight())
    throw std::invalid_argument("problem " + name + ": the flat Helmholtz hypersingular form needs a straight arc");
  if (rhs.is_resolvable()) {
    if (kind != ProblemKind::WeaksingLaplace)
      throw std::invalid_argument("problem " + name + ": resolvable right-hand sides need the weakly-singular Laplace form");
    if (rhs.density_mesh->initial() != initial_mesh->initial())
      throw std::invalid_argument("problem " + name + ": density mesh does not refine the initial mesh");
  } else if (!rhs.function) {
    throw std::invalid_argument("problem " + name + ": missing right-hand side");
  }
  if (!(tol >= 1e-14 && tol <= 1e-6)) throw std::invalid_argument("problem " + name + ": tol outside [1e-14, 1e-6]");
}

DiscreteSpace::DiscreteSpace(Mesh mesh, Family family) : mesh_(std::move(mesh)), family_(family) {
  if (family_ == Family::S1_0) {
    if (mesh_.geometry().closed()) throw std::invalid_argument("DiscreteSpace: S1_0 needs an open arc");
    if (mesh_.size() < 2) throw std::invalid_argument("DiscreteSpace: S1_0 needs at least two elements");
  }
}

int assembly_threads() {
  const char* env = std::getenv("ABEM_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 256);
}

namespace {

struct DofTerm {
  std::ptrdiff_t dof;
  double weight;
};

// Dofs touched by element e: for P0 the element itself; for S1_0 the
// derivative weights -1/h, +1/h of the left and right node.
std::vector<DofTerm> derivative_terms(const DiscreteSpace& s, std::size_t e) {
  if (s.family() == Family::P0) return {{static_cast<std::ptrdiff_t>(e), 1.0}};
  const double inv_h = 1.0 / s.mesh()[e].length;
  std::vector<DofTerm> out;
  if (e > 0) out.push_back({static_cast<std::ptrdiff_t>(e) - 1, -inv_h});
  if (e + 1 < s.mesh().size()) out.push_back({static_cast<std::ptrdiff_t>(e), inv_h});
  return out;
}

// Dof of the linear shape p (0 = left, 1 = right) of element e, or -1.
std::ptrdiff_t shape_dof(const DiscreteSpace& s, std::size_t e, int p) {
  const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(e) - 1 + p;
  return d >= 0 && d < static_cast<std::ptrdiff_t>(s.dofs()) ? d : -1;
}

struct DofKey {
  ElementId a, b;
  bool operator==(const DofKey&) const = default;
};
struct DofKeyHash {
  std::size_t operator()(const DofKey& k) const { return std::hash<ElementId>()(k.a * 0x9E3779B97F4A7C15ULL ^ k.b); }
};

DofKey dof_key(const DiscreteSpace& s, std::size_t i) {
  if (s.family() == Family::P0) return {s.mesh()[i].id, 0};
  return {s.mesh()[i].id, s.mesh()[i + 1].id};
}

struct PairValues {
  double laplace = 0.0;
  std::complex<double> helmholtz = 0.0;
  Block2<std::complex<double>> linear{};
};

template <class Body>
void parallel_for(std::size_t begin, std::size_t end, int threads, Body&& body) {
  if (threads <= 1 || end - begin < 2) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < end; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

GalerkinSystem assemble(const ProblemSpec& problem, const DiscreteSpace& space, const GalerkinSystem* reuse,
                        const DiscreteSpace* reuse_space) {
  problem.validate();
  if (space.family() != family_for(problem.kind))
    throw std::invalid_argument(std::string("assemble: space family does not match problem kind ") +
                                to_string(problem.kind));
  if (space.mesh().initial()->geometry != problem.geometry)
    throw std::invalid_argument("assemble: space lives on another geometry");
  if ((reuse == nullptr) != (reuse_space == nullptr))
    throw std::invalid_argument("assemble: reuse needs both the system and its space");

  const Mesh& mesh = space.mesh();
  const Geometry& geom = mesh.geometry();
  const std::size_t ne = mesh.size();
  const std::size_t n = space.dofs();
  const bool helm = is_helmholtz(problem.kind);
  const bool linear = problem.kind == ProblemKind::HypsingHelmholtzFlat;
  const double tol = problem.tol;

  GalerkinSystem sys;
  sys.complex_system = helm;
  sys.energy = Eigen::MatrixXd::Zero(n, n);
  if (helm) sys.system = Eigen::MatrixXcd::Zero(n, n);

  // Dofs whose supporting elements appear unchanged in the reused system.
  std::vector<std::ptrdiff_t> old(n, -1);
  if (reuse && reuse_space->family() == space.family() && reuse_space->mesh().initial() == mesh.initial() &&
      reuse->complex_system == helm) {
    std::unordered_map<DofKey, std::size_t, DofKeyHash> prev;
    for (std::size_t i = 0; i < reuse_space->dofs(); ++i) prev.emplace(dof_key(*reuse_space, i), i);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = prev.find(dof_key(space, i));
      if (it != prev.end()) old[i] = static_cast<std::ptrdiff_t>(it->second);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (old[j] < 0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (old[i] < 0) continue;
        sys.energy(i, j) = reuse->energy(old[i], old[j]);
        if (helm) sys.system(i, j) = reuse->system(old[i], old[j]);
      }
    }
  }
  auto reused = [&](std::ptrdiff_t i, std::ptrdiff_t j) { return old[i] >= 0 && old[j] >= 0; };

  std::vector<std::vector<DofTerm>> terms(ne);
  std::vector<EdgePiece> pieces(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    terms[e] = derivative_terms(space, e);
    pieces[e] = mesh.piece(e);
  }
  // An element pair is needed when it feeds at least one entry not reused.
  auto pair_needed = [&](std::size_t e, std::size_t f) {
    for (const DofTerm& a : terms[e])
      for (const DofTerm& b : terms[f])
        if (!reused(a.dof, b.dof)) return true;
    if (linear)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
          const auto a = shape_dof(space, e, p), b = shape_dof(space, f, q);
          if (a >= 0 && b >= 0 && !reused(a, b)) return true;
        }
    return false;
  };

  const int threads = assembly_threads();
  const double k2 = helm ? problem.kappa->value() * problem.kappa->value() : 0.0;
  constexpr std::size_t kRowBlock = 64;
  std::vector<std::vector<std::pair<std::size_t, PairValues>>> rows(kRowBlock);
  for (std::size_t r0 = 0; r0 < ne; r0 += kRowBlock) {
    const std::size_t r1 = std::min(ne, r0 + kRowBlock);
    parallel_for(r0, r1, threads, [&](std::size_t e) {
      auto& out = rows[e - r0];
      out.clear();
      for (std::size_t f = e; f < ne; ++f) {
        if (!pair_needed(e, f)) continue;
        const auto [a, b] = panel_pair(geom, pieces[e], pieces[f]);
        PairValues v;
        v.laplace = slp_entry_laplace(a, b, tol);
        if (helm) v.helmholtz = slp_entry_helmholtz(a, b, *problem.kappa, tol);
        if (linear) v.linear = slp_linear_block_helmholtz(a, b, *problem.kappa, tol);
        out.emplace_back(f, v);
      }
    });
    // Serial scatter keeps the summation order independent of threading.
    for (std::size_t e = r0; e < r1; ++e) {
      for (const auto& [f, v] : rows[e - r0]) {
        auto add = [&](std::ptrdiff_t i, std::ptrdiff_t j, double lap, std::complex<double> hel) {
          if (reused(i, j)) return;
          sys.energy(i, j) += lap;
          if (helm) sys.system(i, j) += hel;
          if (e != f) {
            sys.energy(j, i) += lap;
            if (helm) sys.system(j, i) += hel;
          }
        };
        for (const DofTerm& a : terms[e])
          for (const DofTerm& b : terms[f]) {
            const double w = a.weight * b.weight;
            add(a.dof, b.dof, w * v.laplace, w * v.helmholtz);
          }
        if (linear)
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
              const auto i = shape_dof(space, e, p), j = shape_dof(space, f, q);
              if (i >= 0 && j >= 0) add(i, j, 0.0, -k2 * v.linear[p][q]);
            }
      }
    }
  }
  sys.rhs = assemble_rhs(problem, space);
  return sys;
}

CVector assemble_rhs(const ProblemSpec& problem, const DiscreteSpace& space) {
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.dofs();
  CVector rhs = CVector::Zero(n);
  if (problem.rhs.is_resolvable()) {
    if (space.family() != Family::P0) throw std::invalid_argument("assemble_rhs: resolvable rhs needs P0");
    const Mesh& wm = *problem.rhs.density_mesh;
    if (wm.initial() != mesh.initial()) throw std::invalid_argument("assemble_rhs: density mesh is unrelated");
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      double sum = 0.0;
      for (std::size_t c = 0; c < wm.size(); ++c) {
        const auto [a, b] = panel_pair(mesh.geometry(), mesh.piece(i), wm.piece(c));
        sum += problem.rhs.density[c] * slp_entry_laplace(a, b, problem.tol);
      }
      rhs[i] = sum;
    }
    return rhs;
  }
  const GaussRule& rule = gauss_legendre(16);
  for (std::size_t e = 0; e < mesh.size(); ++e) {
    const Segment s = mesh.panel(e);
    const double h = mesh[e].length;
    double m0 = 0.0, m1 = 0.0;  // against the left and right linear shape
    for (int q = 0; q < rule.size(); ++q) {
      const double t = 0.5 * (1.0 + rule.nodes[q]);
      const double fw = 0.5 * h * rule.weights[q] * problem.rhs.function(s.at(t * h));
      m0 += (1.0 - t) * fw;
      m1 += t * fw;
    }
    if (space.family() == Family::P0) {
      rhs[e] = m0 + m1;
    } else {
      if (e > 0) rhs[e - 1] += m0;
      if (e + 1 < mesh.size()) rhs[e] += m1;
    }
  }
  return rhs;
}

namespace {

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

// Symmetric diagonal equilibration: on graded meshes the diagonal of V or W
// spans many orders of magnitude, which would otherwise defeat both the
// pivot test and the accuracy of the LU.
template <class Matrix>
Eigen::VectorXd equilibration(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = std::abs(a(i, i));
    if (!(d > 0.0)) d = a.row(i).cwiseAbs().maxCoeff();
    s[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  return s;
}

template <class Matrix>
void factorize(const Matrix& a, Eigen::VectorXd& s, Eigen::PartialPivLU<Matrix>& lu) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("solve: dimension mismatch");
  s = equilibration(a);
  const Matrix as = s.asDiagonal() * a * s.asDiagonal();
  const double scale = as.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw SolveError("solve: zero matrix (dof 0)", 0);
  lu.compute(as);
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index k = 0; k < n; ++k)
    if (!(std::abs(diag[k]) >= 1e-14 * scale))
      throw SolveError("solve: matrix is singular or ill-conditioned at dof " + std::to_string(k) + " (pivot " +
                           sci(std::abs(diag[k]) / scale) + " of the scale)",
                       k);
}

template <class Matrix, class Vector>
Vector lu_solve(const Matrix& a, const Vector& b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve: dimension mismatch");
  if (n == 0) return Vector();
  Eigen::VectorXd s;
  Eigen::PartialPivLU<Matrix> lu;
  factorize(a, s, lu);
  auto apply_inverse = [&](const Vector& r) { return Vector(s.asDiagonal() * lu.solve(Vector(s.asDiagonal() * r))); };
  Vector x = apply_inverse(b);
  const double bn = b.norm();
  double res = (a * x - b).norm();
  if (res > 1e-10 * bn) {
    x += apply_inverse(Vector(b - a * x));  // one step of iterative refinement
    res = (a * x - b).norm();
    if (res > 1e-10 * bn) throw SolveError("solve: relative residual " + sci(res / bn) + " exceeds 1e-10", -1);
  }
  return x;
}

}  // namespace

Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) { return lu_solve(a, b); }

DenseLU::DenseLU(const Eigen::MatrixXd& a) {
  if (a.rows() > 0) factorize(a, scale_, lu_);
}

Eigen::VectorXd DenseLU::solve(const Eigen::VectorXd& b) const {
  if (b.size() != scale_.size()) throw std::invalid_argument("DenseLU: dimension mismatch");
  if (b.size() == 0) return b;
  return scale_.asDiagonal() * lu_.solve(Eigen::VectorXd(scale_.asDiagonal() * b));
}
CVector solve_dense(const Eigen::MatrixXcd& a, const CVector& b) { return lu_solve(a, b); }

CVector solve(const GalerkinSystem& system) {
  if (system.complex_system) return solve_dense(system.system, system.rhs);
  const double imag = system.rhs.imag().cwiseAbs().maxCoeff();
  const Eigen::VectorXd re = solve_dense(system.energy, Eigen::VectorXd(system.rhs.real()));
  CVector x = re.cast<std::complex<double>>();
  if (imag > 0.0) x += std::complex<double>(0.0, 1.0) * solve_dense(system.energy, Eigen::VectorXd(system.rhs.imag()));
  return x;
}

double energy_sq(const Eigen::MatrixXd& energy, const CVector& v) {
  if (energy.rows() != v.size()) throw std::invalid_argument("energy_sq: dimension mismatch");
  const Eigen::VectorXd re = v.real(), im = v.imag();
  double e = re.dot(energy * re);
  if (im.cwiseAbs().maxCoeff() > 0.0) e += im.dot(energy * im);
  return e;
}

double energy_sq(const GalerkinSystem& system, const CVector& v) { return energy_sq(system.energy, v); }

Prolongation::Prolongation(const DiscreteSpace& coarse, const DiscreteSpace& fine) : cols_(coarse.dofs()) {
  if (coarse.family() != fine.family()) throw std::invalid_argument("prolong: spaces of different families");
  const Mesh& cm = coarse.mesh();
  const Mesh& fm = fine.mesh();
  if (cm.initial() != fm.initial()) throw std::invalid_argument("prolong: meshes are unrelated");
  auto ancestor = [&](ElementId id) {
    while (id != 0) {
      const std::ptrdiff_t i = cm.find(id);
      if (i >= 0) return static_cast<std::size_t>(i);
      id = id_parent(id);
    }
    throw std::invalid_argument("prolong: target mesh is not a refinement of the source mesh");
  };
  rows_.resize(fine.dofs());
  if (fine.family() == Family::P0) {
    for (std::size_t i = 0; i < fm.size(); ++i)
      rows_[i] = {Term{static_cast<std::ptrdiff_t>(ancestor(fm[i].id)), 1.0}, Term{-1, 0.0}};
    return;
  }
  const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(coarse.dofs());
  for (std::size_t i = 0; i + 1 < fm.size(); ++i) {
    // node at the right end of fine element i
    const std::size_t c = ancestor(fm[i].id);
    const int shift = fm[i].generation - cm[c].generation;
    const double frac = std::ldexp(static_cast<double>((fm[i].index + 1) - (cm[c].index << shift)), -shift);
    const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(c) - 1, right = static_cast<std::ptrdiff_t>(c);
    std::array<Term, 2> t{Term{-1, 0.0}, Term{-1, 0.0}};
    if (frac == 1.0) {
      t[0] = {right, 1.0};
    } else {
      if (left >= 0) t[0] = {left, 1.0 - frac};
      if (right < nc) t[1] = {right, frac};
    }
    rows_[i] = t;
  }
}

CVector Prolongation::apply(const CVector& coarse) const {
  if (static_cast<std::size_t>(coarse.size()) != cols_) throw std::invalid_argument("prolong: dimension mismatch");
  CVector out = CVector::Zero(rows());
  for (std::size_t i = 0; i < rows(); ++i)
    for (const Term& t : rows_[i])
      if (t.col >= 0) out[i] += t.weight * coarse[t.col];
  return out;
}

Eigen::VectorXd Prolongation::apply(const Eigen::VectorXd& coarse) const {
  return apply(CVector(coarse.cast<std::complex<double>>())).real();
}

CVector Prolongation::restrict_vector(const CVector& fine) const {
  if (static_cast<std::size_t>(fine.size()) != rows()) throw std::invalid_argument("restrict: dimension mismatch");
  CVector out = CVector::Zero(cols_);
  for (std::size_t i = 0; i < rows(); ++i)
    for (const Term& t : rows_[i])
      if (t.col >= 0) out[t.col] += t.weight * fine[i];
  return out;
}

namespace {

template <class Matrix>
Matrix restrict_impl(const Prolongation& p, const Matrix& a) {
  const Eigen::Index nf = static_cast<Eigen::Index>(p.rows()), nc = static_cast<Eigen::Index>(p.cols());
  if (a.rows() != nf || a.cols() != nf) throw std::invalid_argument("restrict: dimension mismatch");
  Matrix ap = Matrix::Zero(nf, nc);
  for (Eigen::Index k = 0; k < nf; ++k)
    for (const auto& t : p.row(k))
      if (t.col >= 0) ap.col(t.col) += t.weight * a.col(k);
  Matrix out = Matrix::Zero(nc, nc);
  for (Eigen::Index j = 0; j < nc; ++j)
    for (Eigen::Index k = 0; k < nf; ++k)
      for (const auto& t : p.row(k))
        if (t.col >= 0) out(t.col, j) += t.weight * ap(k, j);
  return out;
}

}  // namespace

Eigen::MatrixXd Prolongation::restrict_matrix(const Eigen::MatrixXd& a) const { return restrict_impl(*this, a); }
Eigen::MatrixXcd Prolongation::restrict_matrix(const Eigen::MatrixXcd& a) const { return restrict_impl(*this, a); }

CVector prolong(const CVector& v, const DiscreteSpace& from, const DiscreteSpace& to) {
  return Prolongation(from, to).apply(v);
}

GalerkinSystem restrict_system(const GalerkinSystem& fine, const Prolongation& p) {
  GalerkinSystem out;
  out.complex_system = fine.complex_system;
  out.energy = p.restrict_matrix(fine.energy);
  if (fine.complex_system) out.system = p.restrict_matrix(fine.system);
  out.rhs = p.restrict_vector(fine.rhs);
  return out;
}

double error_energy_sq(const ProblemSpec& problem, const CVector& u_h, const DiscreteSpace& space,
                       const GalerkinSystem& system) {
  if (problem.rhs.is_resolvable()) {
    const DiscreteSpace ws(*problem.rhs.density_mesh, Family::P0);
    const CVector w = prolong(problem.rhs.density.cast<std::complex<double>>(), ws, space);
    return energy_sq(system.energy, CVector(w - u_h));
  }
  if (is_helmholtz(problem.kind))
    throw std::invalid_argument("error_energy_sq: Helmholtz errors need a reference solution");
  if (!problem.reference_energy) throw std::invalid_argument("error_energy_sq: problem has no reference energy");
  return *problem.reference_energy - energy_sq(system.energy, u_h);
}

double error_energy_sq(const CVector& u_h, const DiscreteSpace& space, const ReferenceSolution& ref) {
  const CVector diff = *ref.u - prolong(u_h, space, *ref.space);
  return energy_sq(*ref.energy, diff);
}

}  // namespace abem
