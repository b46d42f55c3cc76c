#include "abem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace abem {

std::vector<Enrichment> enrichments(const DiscreteSpace& coarse, const DiscreteSpace& fine,
                                    const Eigen::MatrixXd& fine_energy) {
  const Mesh& cm = coarse.mesh();
  const Mesh& fm = fine.mesh();
  if (fm.size() != 2 * cm.size()) throw std::invalid_argument("enrichments: fine space is not the uniform refinement");
  std::vector<Enrichment> out;
  out.reserve(cm.size());
  for (std::size_t t = 0; t < cm.size(); ++t) {
    const std::ptrdiff_t c0 = fm.find(id_child(cm[t].id, 0));
    const std::ptrdiff_t c1 = fm.find(id_child(cm[t].id, 1));
    if (c0 < 0 || c1 < 0) throw std::invalid_argument("enrichments: fine space is not the uniform refinement");
    Enrichment e{cm[t].id, {}, 0.0};
    if (coarse.family() == Family::P0) {
      e.coefficients = {{static_cast<std::size_t>(c0), 1.0}, {static_cast<std::size_t>(c1), -1.0}};
      e.energy_sq = fine_energy(c0, c0) + fine_energy(c1, c1) - 2.0 * fine_energy(c0, c1);
    } else {
      // the midpoint node sits between the two sons; S1_0 dof i is the node
      // after fine element i
      e.coefficients = {{static_cast<std::size_t>(c0), 1.0}};
      e.energy_sq = fine_energy(c0, c0);
    }
    if (!(e.energy_sq > 0.0)) throw std::runtime_error("enrichments: non-positive enrichment energy");
    out.push_back(std::move(e));
  }
  return out;
}

IndicatorSet::IndicatorSet(std::vector<ElementId> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)), by_id_(ids_.size()) {
  if (ids_.size() != values_.size()) throw std::invalid_argument("IndicatorSet: size mismatch");
  std::iota(by_id_.begin(), by_id_.end(), std::size_t{0});
  std::sort(by_id_.begin(), by_id_.end(), [&](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
}

double IndicatorSet::value(ElementId id) const {
  const auto it = std::lower_bound(by_id_.begin(), by_id_.end(), id,
                                   [&](std::size_t pos, ElementId key) { return ids_[pos] < key; });
  if (it == by_id_.end() || ids_[*it] != id) throw std::invalid_argument("IndicatorSet: unknown element");
  return values_[*it];
}

bool IndicatorSet::contains(ElementId id) const {
  const auto it = std::lower_bound(by_id_.begin(), by_id_.end(), id,
                                   [&](std::size_t pos, ElementId key) { return ids_[pos] < key; });
  return it != by_id_.end() && ids_[*it] == id;
}

double IndicatorSet::total_sq() const {
  long double s = 0.0L;
  for (std::size_t pos : by_id_) s += static_cast<long double>(values_[pos]) * values_[pos];
  return static_cast<double>(s);
}

double IndicatorSet::total() const { return std::sqrt(total_sq()); }

double IndicatorSet::subset_sq(std::span<const ElementId> subset) const {
  std::vector<ElementId> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  long double s = 0.0L;
  for (ElementId id : sorted) {
    const double v = value(id);
    s += static_cast<long double>(v) * v;
  }
  return static_cast<double>(s);
}

FineLevel make_fine_level(const ProblemSpec& problem, const DiscreteSpace& coarse, const FineLevel* reuse) {
  DiscreteSpace fine(uniform_refine(coarse.mesh()), coarse.family());
  GalerkinSystem sys = reuse ? assemble(problem, fine, &reuse->system, &reuse->space) : assemble(problem, fine);
  Prolongation p(coarse, fine);
  return FineLevel{std::move(fine), std::move(sys), std::move(p)};
}

IndicatorSet indicators(const DiscreteSpace& coarse, const FineLevel& fine, const CVector& u_coarse) {
  if (static_cast<std::size_t>(u_coarse.size()) != coarse.dofs())
    throw std::invalid_argument("indicators: coefficient vector does not match the space");
  const CVector u_fine = fine.from_coarse.apply(u_coarse);
  CVector residual;
  if (fine.system.complex_system)
    residual = fine.system.rhs - fine.system.system * u_fine;
  else
    residual = fine.system.rhs - fine.system.energy.cast<std::complex<double>>() * u_fine;
  const auto enr = enrichments(coarse, fine.space, fine.system.energy);
  std::vector<ElementId> ids;
  std::vector<double> values;
  ids.reserve(enr.size());
  values.reserve(enr.size());
  for (const Enrichment& e : enr) {
    std::complex<double> r = 0.0;
    for (const auto& [i, w] : e.coefficients) r += w * residual[i];
    ids.push_back(e.element);
    values.push_back(std::abs(r) / std::sqrt(e.energy_sq));
  }
  return IndicatorSet(std::move(ids), std::move(values));
}

IndicatorSet indicators(const ProblemSpec& problem, const DiscreteSpace& coarse, const CVector& u_coarse) {
  return indicators(coarse, make_fine_level(problem, coarse), u_coarse);
}

namespace {

bool negligible(double diff_sq, double scale_sq) { return diff_sq <= 1e-20 * std::max(scale_sq, 1e-300); }

}  // namespace

E1Ratios measure_E1(const ProblemSpec& problem, const DiscreteSpace& coarse, std::span<const ElementId> marked) {
  const DiscreteSpace fine(refine(coarse.mesh(), marked), coarse.family());
  const FineLevel hat = make_fine_level(problem, coarse);
  const GalerkinSystem sys_coarse = restrict_system(hat.system, hat.from_coarse);
  const GalerkinSystem sys_fine = restrict_system(hat.system, Prolongation(fine, hat.space));
  const CVector u_coarse = solve(sys_coarse);
  const CVector u_fine = solve(sys_fine);
  const IndicatorSet ind = indicators(coarse, hat, u_coarse);

  const CVector diff = u_fine - Prolongation(coarse, fine).apply(u_coarse);
  const double diff_sq = std::max(energy_sq(sys_fine.energy, diff), 0.0);
  std::vector<ElementId> refined;
  for (const Element& e : coarse.mesh().elements())
    if (!fine.mesh().contains(e.id)) refined.push_back(e.id);

  E1Ratios r{0.0, 0.0, std::sqrt(diff_sq), false};
  if (negligible(diff_sq, energy_sq(sys_coarse.energy, u_coarse))) {
    r.exact_zero = true;
    return r;
  }
  r.lower = std::sqrt(ind.subset_sq(marked)) / r.difference;
  const double denom = std::sqrt(ind.subset_sq(refined));
  r.upper = denom > 0.0 ? r.difference / denom : INFINITY;
  return r;
}

E2Ratio measure_E2(const ProblemSpec& problem, const DiscreteSpace& coarse, const DiscreteSpace& fine) {
  if (!is_refinement_of(fine.mesh(), coarse.mesh()))
    throw std::invalid_argument("measure_E2: fine mesh does not refine the coarse mesh");
  const FineLevel hat_fine = make_fine_level(problem, fine);
  const DiscreteSpace hat_coarse_space(uniform_refine(coarse.mesh()), coarse.family());
  // T^_H is refined by T^_h, so both levels come from one assembly.
  const Prolongation to_hat_fine(hat_coarse_space, hat_fine.space);
  const FineLevel hat_coarse{hat_coarse_space, restrict_system(hat_fine.system, to_hat_fine),
                             Prolongation(coarse, hat_coarse_space)};
  const GalerkinSystem sys_coarse = restrict_system(hat_fine.system, Prolongation(coarse, hat_fine.space));
  const GalerkinSystem sys_fine = restrict_system(hat_fine.system, hat_fine.from_coarse);
  const CVector u_coarse = solve(sys_coarse);
  const CVector u_fine = solve(sys_fine);
  const IndicatorSet ind_coarse = indicators(coarse, hat_coarse, u_coarse);
  const IndicatorSet ind_fine = indicators(fine, hat_fine, u_fine);

  std::vector<ElementId> shared;
  for (const Element& e : coarse.mesh().elements())
    if (fine.mesh().contains(e.id)) shared.push_back(e.id);
  const double num = std::abs(std::sqrt(ind_fine.subset_sq(shared)) - std::sqrt(ind_coarse.subset_sq(shared)));
  const CVector diff = u_fine - Prolongation(coarse, fine).apply(u_coarse);
  const double diff_sq = std::max(energy_sq(sys_fine.energy, diff), 0.0);
  E2Ratio r{0.0, num, std::sqrt(diff_sq), false};
  if (negligible(diff_sq, energy_sq(sys_coarse.energy, u_coarse))) {
    r.exact_zero = true;
    return r;
  }
  r.ratio = num / r.difference;
  return r;
}

}  // namespace abem
