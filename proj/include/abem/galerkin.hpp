#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abem/mesh.hpp"

namespace abem {

enum class ProblemKind { WeaksingLaplace, WeaksingHelmholtz, HypsingLaplace, HypsingHelmholtzFlat };
enum class Family { P0, S1_0 };

const char* to_string(ProblemKind kind);
bool is_helmholtz(ProblemKind kind);
Family family_for(ProblemKind kind);

/// Right-hand side: either a function of the boundary point, or the
/// potential f = V w of a piecewise constant density w on a mesh, in which
/// case the exact solution is w itself.
struct Rhs {
  std::function<double(Point)> function;
  std::shared_ptr<const Mesh> density_mesh;
  Eigen::VectorXd density;

  static Rhs constant(double value);
  static Rhs resolvable(std::shared_ptr<const Mesh> mesh, Eigen::VectorXd w);
  bool is_resolvable() const { return density_mesh != nullptr; }
};

struct ProblemSpec {
  std::string name;
  ProblemKind kind = ProblemKind::WeaksingLaplace;
  std::shared_ptr<const Geometry> geometry;
  /// Initial mesh T_0; all meshes of a run refine it.
  std::shared_ptr<const Mesh> initial_mesh;
  std::optional<Wavenumber> kappa;
  Rhs rhs = Rhs::constant(1.0);
  /// Exact ||u||^2 in the Laplace energy, when known.
  std::optional<double> reference_energy;
  std::string reference_note;
  double tol = kDefaultKernelTol;

  /// Throws std::invalid_argument when the fields are inconsistent.
  void validate() const;
};

using CVector = Eigen::VectorXcd;

/// P0 (one dof per element) or S1_0 (one dof per interior node of an open
/// arc; dof i is the node between elements i and i + 1).
class DiscreteSpace {
 public:
  DiscreteSpace(Mesh mesh, Family family);

  const Mesh& mesh() const { return mesh_; }
  Family family() const { return family_; }
  std::size_t dofs() const { return family_ == Family::P0 ? mesh_.size() : mesh_.size() - 1; }

 private:
  Mesh mesh_;
  Family family_;
};

/// Galerkin matrices of a space. `energy` is the Laplace energy matrix (V for
/// P0, W for S1_0). For Laplace problems the system matrix is `energy` and
/// `system` stays empty.
struct GalerkinSystem {
  Eigen::MatrixXd energy;
  Eigen::MatrixXcd system;
  CVector rhs;
  bool complex_system = false;

  std::size_t size() const { return static_cast<std::size_t>(energy.rows()); }
};

/// Assembles the system on `space`. Entries whose dofs have the same
/// supporting elements in `reuse` (a system assembled for `reuse_space`) are
/// copied instead of recomputed. The thread count comes from ABEM_THREADS.
GalerkinSystem assemble(const ProblemSpec& problem, const DiscreteSpace& space, const GalerkinSystem* reuse = nullptr,
                        const DiscreteSpace* reuse_space = nullptr);

/// Only the right-hand side.
CVector assemble_rhs(const ProblemSpec& problem, const DiscreteSpace& space);

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, std::ptrdiff_t dof) : std::runtime_error(what), dof_(dof) {}
  std::ptrdiff_t dof() const { return dof_; }

 private:
  std::ptrdiff_t dof_;
};

/// Dense LU with partial pivoting after symmetric diagonal equilibration.
/// Throws SolveError naming the dof whose pivot falls below 1e-14 times the
/// scale of the equilibrated matrix, or when the relative residual exceeds
/// 1e-10.
CVector solve(const GalerkinSystem& system);
Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);
CVector solve_dense(const Eigen::MatrixXcd& a, const CVector& b);

/// The factorisation behind solve_dense for a real matrix, kept for repeated
/// solves (iterative refinement). The rows and columns are equilibrated by
/// the diagonal first; the pivot check is the same.
class DenseLU {
 public:
  explicit DenseLU(const Eigen::MatrixXd& a);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  Eigen::VectorXd scale_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// v^H E v for the Laplace energy matrix.
double energy_sq(const Eigen::MatrixXd& energy, const CVector& v);
double energy_sq(const GalerkinSystem& system, const CVector& v);

/// Sparse prolongation from a coarse space to a nested finer space of the
/// same family: every fine dof is a combination of at most two coarse dofs.
class Prolongation {
 public:
  Prolongation(const DiscreteSpace& coarse, const DiscreteSpace& fine);

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return cols_; }
  CVector apply(const CVector& coarse) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& coarse) const;
  /// P^T v.
  CVector restrict_vector(const CVector& fine) const;
  /// P^T A P.
  Eigen::MatrixXd restrict_matrix(const Eigen::MatrixXd& a) const;
  Eigen::MatrixXcd restrict_matrix(const Eigen::MatrixXcd& a) const;

  struct Term {
    std::ptrdiff_t col;  // -1 for an unused slot
    double weight;
  };
  const std::array<Term, 2>& row(std::size_t i) const { return rows_[i]; }

 private:
  std::vector<std::array<Term, 2>> rows_;
  std::size_t cols_;
};

CVector prolong(const CVector& v, const DiscreteSpace& from, const DiscreteSpace& to);

/// Restriction of a fine system to a nested coarse space (P^T A P, P^T F).
GalerkinSystem restrict_system(const GalerkinSystem& fine, const Prolongation& p);

/// Energy error of u_H. Laplace: ||u||^2 - ||u_H||^2 from the reference
/// energy. Resolvable right-hand sides: ||w - u_H||^2 computed directly. For
/// Helmholtz pass a reference solution on a refinement of the mesh.
double error_energy_sq(const ProblemSpec& problem, const CVector& u_h, const DiscreteSpace& space,
                       const GalerkinSystem& system);
struct ReferenceSolution {
  const DiscreteSpace* space;
  const Eigen::MatrixXd* energy;
  const CVector* u;
};
double error_energy_sq(const CVector& u_h, const DiscreteSpace& space, const ReferenceSolution& ref);

/// Thread count for assembly (ABEM_THREADS, default 1).
int assembly_threads();

}  // namespace abem
