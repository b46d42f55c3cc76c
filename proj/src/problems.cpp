#include "abem/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace abem {

namespace {

constexpr double kSlitHalf = 0.4;
constexpr double kSquareSide = 0.2;

std::shared_ptr<const Geometry> slit() {
  return std::make_shared<Geometry>(std::vector<Point>{{-kSlitHalf, 0.0}, {kSlitHalf, 0.0}}, false);
}

std::shared_ptr<const Geometry> square() {
  const double h = 0.5 * kSquareSide;
  return std::make_shared<Geometry>(std::vector<Point>{{-h, -h}, {h, -h}, {h, h}, {-h, h}}, true);
}

}  // namespace

double square_capacity(double side) {
  const double g = std::tgamma(0.25);
  return g * g / (4.0 * std::pow(std::numbers::pi, 1.5)) * side;
}

std::vector<std::string> problem_names() {
  return {"slit_weaksing", "slit_hypsing", "square_weaksing", "slit_helmholtz", "slit_hypsing_helmholtz_flat",
          "resolvable_check"};
}

ProblemSpec make_problem(const std::string& name, std::optional<double> kappa) {
  ProblemSpec p;
  p.name = name;
  p.rhs = Rhs::constant(1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  if (name == "slit_weaksing") {
    // V u = 1 on [-a, a]: u = c / sqrt(a^2 - x^2) with c = 2 / log(2/a)
    p.kind = ProblemKind::WeaksingLaplace;
    p.geometry = slit();
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 2));
    p.reference_energy = two_pi / std::log(2.0 / kSlitHalf);
    p.reference_note = "exact: 2 pi / log(2/a) from the equilibrium density of the slit";
  } else if (name == "slit_hypsing") {
    // W u = 1 on [-a, a]: u = 2 sqrt(a^2 - x^2)
    p.kind = ProblemKind::HypsingLaplace;
    p.geometry = slit();
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 2));
    p.reference_energy = std::numbers::pi * kSlitHalf * kSlitHalf;
    p.reference_note = "exact: pi a^2 from u = 2 sqrt(a^2 - x^2)";
  } else if (name == "square_weaksing") {
    p.kind = ProblemKind::WeaksingLaplace;
    p.geometry = square();
    // two elements per side: with one, every Haar indicator vanishes by symmetry
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 8));
    p.reference_energy = two_pi / std::log(1.0 / square_capacity(kSquareSide));
    p.reference_note = "exact: 2 pi / log(1/cap) with cap = Gamma(1/4)^2 s / (4 pi^(3/2))";
  } else if (name == "slit_helmholtz") {
    p.kind = ProblemKind::WeaksingHelmholtz;
    p.geometry = slit();
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 2));
    p.kappa = Wavenumber(kappa.value_or(1.0));
    p.reference_note = "uniform refinement of the finest adaptive mesh";
  } else if (name == "slit_hypsing_helmholtz_flat") {
    p.kind = ProblemKind::HypsingHelmholtzFlat;
    p.geometry = slit();
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 2));
    p.kappa = Wavenumber(kappa.value_or(1.0));
    p.reference_note = "uniform refinement of the finest adaptive mesh";
  } else if (name == "resolvable_check") {
    p.kind = ProblemKind::WeaksingLaplace;
    p.geometry = slit();
    p.initial_mesh = std::make_shared<const Mesh>(make_initial_mesh(p.geometry, 2));
    Eigen::VectorXd w(2);
    w << 1.0, -0.5;
    p.rhs = Rhs::resolvable(p.initial_mesh, std::move(w));
    p.reference_note = "exact: u = w on the initial mesh";
  } else {
    throw std::invalid_argument("unknown problem '" + name + "'");
  }
  if (kappa && !p.kappa) throw std::invalid_argument("problem '" + name + "' takes no wavenumber");
  p.validate();
  return p;
}

}  // namespace abem
