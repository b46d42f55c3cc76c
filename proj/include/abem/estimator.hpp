#pragma once

#include <span>
#include <vector>

#include "abem/galerkin.hpp"

namespace abem {

/// Two-level enrichment of one coarse element, as a sparse coefficient
/// vector in the uniformly refined space: the Haar function of the two sons
/// (P0) or the hat of the midpoint node (S1_0).
struct Enrichment {
  ElementId element;
  std::vector<std::pair<std::size_t, double>> coefficients;
  double energy_sq;  // Laplace energy ||phi||^2
};

/// One enrichment per element of `coarse`; `fine` must be its uniform
/// refinement and `fine_energy` the Laplace energy matrix of `fine`.
std::vector<Enrichment> enrichments(const DiscreteSpace& coarse, const DiscreteSpace& fine,
                                    const Eigen::MatrixXd& fine_energy);

/// Element indicators tau_H(T) in mesh order.
class IndicatorSet {
 public:
  IndicatorSet() = default;
  IndicatorSet(std::vector<ElementId> ids, std::vector<double> values);

  std::size_t size() const { return ids_.size(); }
  std::span<const ElementId> ids() const { return ids_; }
  std::span<const double> values() const { return values_; }
  double value(ElementId id) const;
  bool contains(ElementId id) const;

  /// Sum of squares over all elements or a subset, accumulated in
  /// increasing id order.
  double total_sq() const;
  double total() const;
  double subset_sq(std::span<const ElementId> subset) const;

 private:
  std::vector<ElementId> ids_;
  std::vector<double> values_;
  std::vector<std::size_t> by_id_;  // positions sorted by id
};

/// Everything the estimator needs about the uniform refinement of a space.
struct FineLevel {
  DiscreteSpace space;
  GalerkinSystem system;
  Prolongation from_coarse;
};

/// Builds T^_H = uniform_refine(T_H) and assembles its system, reusing
/// entries from `reuse` when given.
FineLevel make_fine_level(const ProblemSpec& problem, const DiscreteSpace& coarse, const FineLevel* reuse = nullptr);

/// tau_H(T) = |<f, phi_T> - b(u_H, phi_T)| / ||phi_T||, evaluated with the fine
/// Galerkin matrix; the denominator is always the Laplace energy.
IndicatorSet indicators(const DiscreteSpace& coarse, const FineLevel& fine, const CVector& u_coarse);

/// Convenience overload that assembles the fine level itself.
IndicatorSet indicators(const ProblemSpec& problem, const DiscreteSpace& coarse, const CVector& u_coarse);

struct E1Ratios {
  double lower;  // tau_H(M_H) / ||u_h - u_H||
  double upper;  // ||u_h - u_H|| / tau_H(T_H \ T_h)
  double difference;
  bool exact_zero;  // ||u_h - u_H|| vanished (reported, ratios set to 0)
};

/// Discrete efficiency and reliability for T_h = refine(T_H, marked).
E1Ratios measure_E1(const ProblemSpec& problem, const DiscreteSpace& coarse, std::span<const ElementId> marked);

struct E2Ratio {
  double ratio;  // |tau_h(T_H n T_h) - tau_H(T_H n T_h)| / ||u_h - u_H||
  double numerator;
  double difference;
  bool exact_zero;
};

/// Stability of the indicators on the elements shared by T_H and T_h.
E2Ratio measure_E2(const ProblemSpec& problem, const DiscreteSpace& coarse, const DiscreteSpace& fine);

}  // namespace abem
