#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abem/estimator.hpp"

namespace abem {

struct AdaptiveParams {
  double theta = 0.5;
  double c_mark = 1.0;  // may be infinite
  std::size_t max_dofs = 2000;
  /// Stop once tau_l <= tau_threshold * ||u_l||.
  double tau_threshold = 1e-9;
  std::size_t max_iterations = 500;
  /// Solve on the uniform refinement every step (saturation ratio and the
  /// two-level equivalence ratio).
  bool fine_solve = true;
  bool pythagoras = true;
  /// Helmholtz only: error against a reference on up to `reference_levels`
  /// uniform refinements of the final mesh; fewer levels are used when the
  /// reference would exceed `reference_max_dofs` (dense complex storage).
  bool helmholtz_reference = false;
  int reference_levels = 3;
  std::size_t reference_max_dofs = 4500;

  void validate() const;
};

/// Dorfler marking: the shortest prefix of the indicators sorted by value
/// (descending, ties by increasing id) with theta * tau^2 <= tau(M)^2. The
/// prefix is minimal, so any c_mark >= 1 is honoured.
std::vector<ElementId> doerfler_mark(const IndicatorSet& ind, double theta, double c_mark = 1.0);

struct IterationRow {
  std::size_t ell = 0;
  std::size_t n_elements = 0;
  std::size_t n_dofs = 0;
  double tau = 0.0;
  std::size_t n_marked = 0;
  double energy_sq = 0.0;                  // ||u_l||^2
  std::optional<double> error_sq;          // ||u - u_l||^2
  std::optional<double> sat_ratio;         // ||u - u^_l|| / ||u - u_l||
  std::optional<double> lin_ratio;         // err_{l+1} / err_l
  /// |(err_l^2 - err_{l+1}^2) - ||u_{l+1} - u_l||^2| / err_l^2 with both
  /// solutions taken for the system of step l + 1 and evaluated in extended
  /// precision (problems with a reference energy).
  std::optional<double> pyth_defect;
  /// The same from the stored double solutions u_l, u_{l+1}; these come from
  /// different fine systems, so quadrature and rounding enter.
  std::optional<double> pyth_defect_run;       // over err_l^2
  std::optional<double> pyth_defect_run_norm;  // over ||u_{l+1}||^2
  std::optional<double> fine_difference;   // ||u^_l - u_l||
  std::optional<double> equivalence;       // tau_l / ||u^_l - u_l||
};

struct ConvergenceRecord {
  std::string problem;
  AdaptiveParams params;
  std::vector<IterationRow> rows;
  std::vector<Mesh> meshes;           // T_0, ..., T_L
  std::vector<CVector> solutions;     // u_0, ..., u_L
  std::vector<IndicatorSet> estimates;
  std::vector<std::vector<ElementId>> marked;  // M_l (empty at the last step)
  std::string stop_reason;
  /// Set when a solve failed; the record is truncated before that iteration.
  std::optional<std::size_t> failed_at;
  std::string failure;
  /// Helmholtz reference size (dofs), when computed.
  std::optional<std::size_t> reference_dofs;
  int reference_levels_used = 0;
};

/// SOLVE, ESTIMATE, MARK, REFINE until the stopping rule holds. The Galerkin
/// system on T_l is the restriction of the system on uniform_refine(T_l),
/// which the estimator needs anyway.
ConvergenceRecord adaptive_loop(const ProblemSpec& problem, const AdaptiveParams& params);

struct RateFit {
  double s = 0.0;  // negated slope of log(q) against log(#T)
  double intercept = 0.0;
  std::size_t first = 0, last = 0;  // window in iterations
  double residual = 0.0;            // RMS of the log-log residuals
  std::size_t excluded = 0;         // nonpositive values dropped
};

/// Least-squares fit over the last `tail_fraction` of the points (at least 5).
RateFit fit_rate(std::span<const double> n_elements, std::span<const double> quantity, double tail_fraction = 0.5);
enum class RateQuantity { Tau, Error };
RateFit fit_rate(const ConvergenceRecord& record, RateQuantity quantity, double tail_fraction = 0.5);

struct SaturationReport {
  std::vector<std::optional<double>> ratios;  // per iteration; empty when not computable
  std::vector<std::size_t> flagged;           // iterations with err^2 <= 1e-16 ||u_l||^2
  std::optional<double> q_sat;                // max over the run
};
SaturationReport saturation_monitor(const ConvergenceRecord& record);

struct LinearReport {
  bool converged = false;  // all ratios from ell0 on are < 1
  double q_lin = 0.0;
  std::size_t ell0 = 0;
  std::optional<double> pyth_defect;           // max over the run
  std::optional<double> pyth_defect_run;       // max, stored solutions, over err_l^2
  std::optional<double> pyth_defect_run_norm;  // max, stored solutions, over ||u_{l+1}||^2
  std::string failure;                     // offending window when !converged
};
LinearReport linear_convergence_monitor(const ConvergenceRecord& record);

/// Same monitor on a bare error sequence (err_l, not squared).
LinearReport linear_convergence_monitor(std::span<const double> errors);

struct BruteForceRow {
  int n_extra = 0;                // N
  std::size_t meshes = 0;         // admissible meshes with exactly N extra elements
  double min_error = 0.0;         // min over #T - #T_0 <= N
  std::vector<ElementId> best;    // a minimiser
};
/// Exhaustive best approximation over all admissible refinements with at most
/// n_max extra elements. Laplace problems with a reference energy only.
std::vector<BruteForceRow> bruteforce_best_approx(const ProblemSpec& problem, int n_max);
inline constexpr int kBruteForceLimit = 12;

struct StrongSaturationSample {
  std::size_t ell;
  double ratio_h;  // ||u - u_h|| / ||u - u_l||
  double ratio_H;  // ||u - u_H|| / ||u - u_l||, T_H = refine(T_l, T_l \ T_h)
};
/// Spot check of saturation in its strong form on random refinements T_h of
/// the run's meshes (at most `max_dofs` dofs). Reported only.
std::vector<StrongSaturationSample> strong_saturation_samples(const ProblemSpec& problem,
                                                              const ConvergenceRecord& record, std::uint64_t seed,
                                                              int samples, std::size_t max_dofs = 400);

}  // namespace abem
