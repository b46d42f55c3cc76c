#include "abem/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace abem {

void AdaptiveParams::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta out of (0,1]");
  if (!(c_mark >= 1.0)) throw std::invalid_argument("c_mark must be >= 1");
  if (max_dofs == 0) throw std::invalid_argument("max_dofs must be positive");
  if (!(tau_threshold >= 0.0)) throw std::invalid_argument("tau threshold must be nonnegative");
  if (reference_levels < 1 || reference_levels > 5) throw std::invalid_argument("reference_levels out of [1,5]");
  if (reference_max_dofs == 0) throw std::invalid_argument("reference_max_dofs must be positive");
}

std::vector<ElementId> doerfler_mark(const IndicatorSet& ind, double theta, double c_mark) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("doerfler_mark: theta out of (0,1]");
  if (!(c_mark >= 1.0)) throw std::invalid_argument("doerfler_mark: c_mark must be >= 1");
  std::vector<std::size_t> order(ind.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto ids = ind.ids();
  const auto vals = ind.values();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (vals[a] != vals[b]) return vals[a] > vals[b];
    return ids[a] < ids[b];
  });
  // The total is summed in the same order as the prefix, so theta = 1 stops
  // exactly at the last nonzero indicator.
  long double total = 0.0L;
  for (std::size_t k : order) total += static_cast<long double>(vals[k]) * vals[k];
  std::vector<ElementId> marked;
  if (total == 0.0L) return marked;
  const long double target = static_cast<long double>(theta) * total;
  long double sum = 0.0L;
  for (std::size_t k : order) {
    if (sum >= target) break;
    sum += static_cast<long double>(vals[k]) * vals[k];
    marked.push_back(ids[k]);
  }
  return marked;
}

namespace {

std::optional<double> ratio_sqrt(double num_sq, double den_sq) {
  if (!(den_sq > 0.0)) return std::nullopt;
  return std::sqrt(std::max(num_sq, 0.0) / den_sq);
}

// Errors below this fraction of ||u||^2 are rounding noise: ratios of them
// are not reported.
constexpr double kVanishingError = 1e-16;

bool vanishing(const IterationRow& r) { return r.error_sq && !(*r.error_sq > kVanishingError * r.energy_sq); }

bool has_laplace_error(const ProblemSpec& p) {
  return !is_helmholtz(p.kind) && (p.reference_energy.has_value() || p.rhs.is_resolvable());
}

// Pythagoras identity in extended precision. Both Galerkin solutions are
// taken with respect to the same (double) matrix A on the finer space: x
// solves A x = b and y solves P^T A P y = P^T b. Since the prolongation
// weights are dyadic the identity then holds exactly, and residuals and
// energies are evaluated in binary128 so that rounding stays far below
// the energy errors even on strongly graded meshes.
using quad = __float128;
using QVector = std::vector<quad>;

QVector mat_vec(const Eigen::MatrixXd& a, const QVector& x) {
  QVector y(static_cast<std::size_t>(a.rows()), 0);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const quad xj = x[static_cast<std::size_t>(j)];
    const double* col = a.col(j).data();
    for (Eigen::Index i = 0; i < a.rows(); ++i) y[static_cast<std::size_t>(i)] += static_cast<quad>(col[i]) * xj;
  }
  return y;
}

QVector prolong_q(const Prolongation& p, const QVector& x) {
  QVector y(p.rows(), 0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (const auto& t : p.row(i))
      if (t.col >= 0) y[i] += static_cast<quad>(t.weight) * x[static_cast<std::size_t>(t.col)];
  return y;
}

QVector restrict_q(const Prolongation& p, const QVector& v) {
  QVector y(p.cols(), 0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (const auto& t : p.row(i))
      if (t.col >= 0) y[static_cast<std::size_t>(t.col)] += static_cast<quad>(t.weight) * v[i];
  return y;
}

quad dot_q(const QVector& a, const QVector& b) {
  quad s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Iterative refinement of op(x) = rhs, preconditioned by a double LU.
// `image` receives the last evaluated op-side product, A (P x) for the
// restricted operator, so that the energies need no further products.
template <class Op>
QVector refined_solve(Op&& op, const QVector& rhs, const DenseLU& lu, QVector& image) {
  QVector x(rhs.size(), 0);
  quad rhs_max = 0;
  for (quad v : rhs) rhs_max = std::max(rhs_max, v < 0 ? -v : v);
  for (int step = 0;; ++step) {
    const QVector ax = op(x, image);
    Eigen::VectorXd r(static_cast<Eigen::Index>(rhs.size()));
    quad r_max = 0;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const quad ri = rhs[i] - ax[i];
      r_max = std::max(r_max, ri < 0 ? -ri : ri);
      r[static_cast<Eigen::Index>(i)] = static_cast<double>(ri);
    }
    if (r_max <= static_cast<quad>(1e-28) * rhs_max || step == 12) return x;
    const Eigen::VectorXd dx = lu.solve(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[static_cast<Eigen::Index>(i)];
  }
}

// |(err_H^2 - err_h^2) - ||u_h - u_H||^2| / err_H^2 for the coarse space
// behind `p` and the fine system (energy matrix and rhs of the finer space).
std::optional<double> pythagoras_defect_extended(const GalerkinSystem& fine, const Prolongation& p,
                                                 double reference_energy) {
  const Eigen::MatrixXd& a = fine.energy;
  QVector b(fine.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = fine.rhs[static_cast<Eigen::Index>(i)].real();
  QVector ax, apy;
  const QVector x = refined_solve(
      [&](const QVector& v, QVector& image) {
        image = mat_vec(a, v);
        return image;
      },
      b, DenseLU(a), ax);
  const QVector y = refined_solve(
      [&](const QVector& v, QVector& image) {
        image = mat_vec(a, prolong_q(p, v));
        return restrict_q(p, image);
      },
      restrict_q(p, b), DenseLU(p.restrict_matrix(a)), apy);
  // ax and apy belong to the returned iterates: the loop exits right after
  // evaluating them
  const QVector py = prolong_q(p, y);
  const quad e_coarse = dot_q(py, apy);
  const quad e_fine = dot_q(x, ax);
  quad e_diff = 0;
  for (std::size_t i = 0; i < x.size(); ++i) e_diff += (x[i] - py[i]) * (ax[i] - apy[i]);
  const quad ref = reference_energy;
  const quad err_coarse = ref - e_coarse;
  const quad err_fine = ref - e_fine;
  quad numer = (err_coarse - err_fine) - e_diff;
  if (numer < 0) numer = -numer;
  if (!(err_coarse > 0)) return std::nullopt;
  return static_cast<double>(numer / err_coarse);
}

void helmholtz_errors(const ProblemSpec& problem, ConvergenceRecord& rec) {
  Mesh ref_mesh = rec.meshes.back();
  // one level at least, so the reference always refines every T_l
  for (int k = 0; k < rec.params.reference_levels; ++k) {
    if (k > 0 && 2 * ref_mesh.size() > rec.params.reference_max_dofs) break;
    ref_mesh = uniform_refine(ref_mesh);
    rec.reference_levels_used = k + 1;
  }
  const Family fam = family_for(problem.kind);
  const DiscreteSpace ref_space(std::move(ref_mesh), fam);
  const GalerkinSystem ref_sys = assemble(problem, ref_space);
  const CVector ref_u = solve(ref_sys);
  rec.reference_dofs = ref_space.dofs();
  const ReferenceSolution ref{&ref_space, &ref_sys.energy, &ref_u};
  for (std::size_t l = 0; l < rec.rows.size(); ++l)
    rec.rows[l].error_sq = error_energy_sq(rec.solutions[l], DiscreteSpace(rec.meshes[l], fam), ref);
  for (std::size_t l = 0; l + 1 < rec.rows.size(); ++l)
    rec.rows[l].lin_ratio = ratio_sqrt(*rec.rows[l + 1].error_sq, *rec.rows[l].error_sq);
}

}  // namespace

ConvergenceRecord adaptive_loop(const ProblemSpec& problem, const AdaptiveParams& params) {
  problem.validate();
  params.validate();
  ConvergenceRecord rec;
  rec.problem = problem.name;
  rec.params = params;
  const Family fam = family_for(problem.kind);
  const bool laplace_error = has_laplace_error(problem);

  Mesh mesh = *problem.initial_mesh;
  std::optional<FineLevel> prev_fine;
  std::optional<DiscreteSpace> prev_space;
  for (std::size_t ell = 0;; ++ell) {
    DiscreteSpace space(mesh, fam);
    FineLevel fine = make_fine_level(problem, space, prev_fine ? &*prev_fine : nullptr);
    const GalerkinSystem sys = restrict_system(fine.system, fine.from_coarse);
    CVector u;
    try {
      u = solve(sys);
    } catch (const SolveError& e) {
      rec.failed_at = ell;
      rec.failure = "iteration " + std::to_string(ell) + ": " + e.what();
      rec.stop_reason = "solver failure";
      return rec;
    }
    IndicatorSet ind = indicators(space, fine, u);

    IterationRow row;
    row.ell = ell;
    row.n_elements = mesh.size();
    row.n_dofs = space.dofs();
    row.tau = ind.total();
    row.energy_sq = energy_sq(sys, u);
    if (laplace_error) row.error_sq = error_energy_sq(problem, u, space, sys);

    if (params.fine_solve) {
      CVector u_hat;
      try {
        u_hat = solve(fine.system);
      } catch (const SolveError& e) {
        rec.failed_at = ell;
        rec.failure = "iteration " + std::to_string(ell) + " (uniform refinement): " + e.what();
        rec.stop_reason = "solver failure";
        return rec;
      }
      const double d2 = energy_sq(fine.system, CVector(u_hat - fine.from_coarse.apply(u)));
      row.fine_difference = std::sqrt(std::max(d2, 0.0));
      if (*row.fine_difference > 0.0) row.equivalence = row.tau / *row.fine_difference;
      if (laplace_error && !vanishing(row))
        row.sat_ratio = ratio_sqrt(error_energy_sq(problem, u_hat, fine.space, fine.system), *row.error_sq);
    }

    if (ell > 0) {
      IterationRow& last = rec.rows.back();
      if (laplace_error) last.lin_ratio = ratio_sqrt(*row.error_sq, *last.error_sq);
      if (params.pythagoras && laplace_error) {
        // as run: the two levels come from different fine systems
        const CVector d = u - prolong(rec.solutions.back(), *prev_space, space);
        const double numer = std::abs((*last.error_sq - *row.error_sq) - energy_sq(sys, d));
        if (*last.error_sq > 0.0) last.pyth_defect_run = numer / *last.error_sq;
        if (row.energy_sq > 0.0) last.pyth_defect_run_norm = numer / row.energy_sq;
        if (problem.reference_energy)
          last.pyth_defect = pythagoras_defect_extended(sys, Prolongation(*prev_space, space), *problem.reference_energy);
        else
          last.pyth_defect = last.pyth_defect_run;
      }
    }

    std::string stop;
    if (space.dofs() >= params.max_dofs)
      stop = "max_dofs reached";
    else if (row.tau <= params.tau_threshold * std::sqrt(std::max(row.energy_sq, 0.0)))
      stop = "tau below threshold";
    else if (ell + 1 >= params.max_iterations)
      stop = "iteration limit";

    std::vector<ElementId> marked;
    if (stop.empty()) {
      marked = doerfler_mark(ind, params.theta, params.c_mark);
      if (marked.empty()) stop = "nothing to mark";
    }
    row.n_marked = marked.size();
    rec.rows.push_back(row);
    rec.meshes.push_back(mesh);
    rec.solutions.push_back(std::move(u));
    rec.estimates.push_back(std::move(ind));
    rec.marked.push_back(marked);
    if (!stop.empty()) {
      rec.stop_reason = stop;
      break;
    }
    mesh = refine(mesh, marked);
    prev_fine = std::move(fine);
    prev_space = std::move(space);
  }
  if (is_helmholtz(problem.kind) && params.helmholtz_reference) helmholtz_errors(problem, rec);
  return rec;
}

RateFit fit_rate(std::span<const double> n_elements, std::span<const double> quantity, double tail_fraction) {
  if (n_elements.size() != quantity.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("fit_rate: tail fraction out of (0,1]");
  const std::size_t n = quantity.size();
  std::size_t len = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  len = std::min(n, std::max<std::size_t>(len, 5));
  if (len < 5) throw std::invalid_argument("fit_rate: fewer than 5 iterations recorded");
  RateFit fit;
  fit.first = n - len;
  fit.last = n - 1;
  std::vector<double> x, y;
  for (std::size_t i = fit.first; i < n; ++i) {
    if (!(quantity[i] > 0.0) || !(n_elements[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    x.push_back(std::log(n_elements[i]));
    y.push_back(std::log(quantity[i]));
  }
  if (x.size() < 3) throw std::invalid_argument("fit_rate: fewer than 3 positive values in the window");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: element counts do not vary");
  const double slope = sxy / sxx;
  fit.s = -slope;
  fit.intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + slope * x[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / m);
  return fit;
}

RateFit fit_rate(const ConvergenceRecord& record, RateQuantity quantity, double tail_fraction) {
  std::vector<double> n, q;
  for (const IterationRow& r : record.rows) {
    n.push_back(static_cast<double>(r.n_elements));
    if (quantity == RateQuantity::Tau) {
      q.push_back(r.tau);
    } else {
      if (!r.error_sq) throw std::invalid_argument("fit_rate: record has no errors");
      q.push_back(std::sqrt(std::max(*r.error_sq, 0.0)));
    }
  }
  return fit_rate(n, q, tail_fraction);
}

SaturationReport saturation_monitor(const ConvergenceRecord& record) {
  SaturationReport rep;
  for (const IterationRow& r : record.rows) {
    rep.ratios.push_back(r.sat_ratio);
    if (vanishing(r)) rep.flagged.push_back(r.ell);
    if (r.sat_ratio) rep.q_sat = std::max(rep.q_sat.value_or(0.0), *r.sat_ratio);
  }
  return rep;
}

LinearReport linear_convergence_monitor(std::span<const double> errors) {
  LinearReport rep;
  if (errors.size() < 2) {
    rep.failure = "fewer than two errors";
    return rep;
  }
  std::vector<double> q;
  for (std::size_t l = 0; l + 1 < errors.size(); ++l)
    q.push_back(errors[l] > 0.0 ? errors[l + 1] / errors[l] : std::numeric_limits<double>::infinity());
  // smallest ell0 after which every ratio is < 1
  std::size_t ell0 = q.size();
  while (ell0 > 0 && q[ell0 - 1] < 1.0) --ell0;
  if (ell0 == q.size()) {
    std::ostringstream msg;
    msg << "ratio " << q.back() << " >= 1 at the last step " << q.size() - 1;
    rep.failure = msg.str();
    rep.ell0 = ell0;
    return rep;
  }
  rep.converged = true;
  rep.ell0 = ell0;
  rep.q_lin = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(ell0), q.end());
  return rep;
}

LinearReport linear_convergence_monitor(const ConvergenceRecord& record) {
  std::vector<double> err;
  for (const IterationRow& r : record.rows) {
    if (!r.error_sq) {
      LinearReport rep;
      rep.failure = "record has no errors";
      return rep;
    }
    err.push_back(std::sqrt(std::max(*r.error_sq, 0.0)));
  }
  LinearReport rep = linear_convergence_monitor(err);
  for (const IterationRow& r : record.rows) {
    if (r.pyth_defect) rep.pyth_defect = std::max(rep.pyth_defect.value_or(0.0), *r.pyth_defect);
    if (r.pyth_defect_run) rep.pyth_defect_run = std::max(rep.pyth_defect_run.value_or(0.0), *r.pyth_defect_run);
    if (r.pyth_defect_run_norm)
      rep.pyth_defect_run_norm = std::max(rep.pyth_defect_run_norm.value_or(0.0), *r.pyth_defect_run_norm);
  }
  return rep;
}

std::vector<BruteForceRow> bruteforce_best_approx(const ProblemSpec& problem, int n_max) {
  if (n_max < 0 || n_max > kBruteForceLimit)
    throw std::invalid_argument("bruteforce: n_max must lie in [0, " + std::to_string(kBruteForceLimit) + "]");
  problem.validate();
  if (is_helmholtz(problem.kind) || !problem.reference_energy)
    throw std::invalid_argument("bruteforce: needs a Laplace problem with a reference energy");
  const Family fam = family_for(problem.kind);
  const Mesh& initial = *problem.initial_mesh;
  const std::vector<Mesh> meshes = enumerate_admissible(initial, n_max);

  // Every candidate is a coarsening of one uniform mesh; assemble that once
  // and restrict.
  int depth = 0;
  for (const Mesh& m : meshes)
    for (const Element& e : m.elements()) depth = std::max(depth, e.generation);
  Mesh top = initial;
  for (int k = 0; k < depth; ++k) top = uniform_refine(top);
  const DiscreteSpace top_space(top, fam);
  const GalerkinSystem top_sys = assemble(problem, top_space);

  std::vector<BruteForceRow> rows(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    rows[n].n_extra = n;
    rows[n].min_error = std::numeric_limits<double>::infinity();
  }
  for (const Mesh& m : meshes) {
    const int n = static_cast<int>(m.size() - initial.size());
    const DiscreteSpace s(m, fam);
    const GalerkinSystem sys = restrict_system(top_sys, Prolongation(s, top_space));
    const double err = std::sqrt(std::max(error_energy_sq(problem, solve(sys), s, sys), 0.0));
    BruteForceRow& row = rows[n];
    ++row.meshes;
    if (err < row.min_error) {
      row.min_error = err;
      row.best = m.ids();
    }
  }
  for (int n = 1; n <= n_max; ++n)
    if (rows[n - 1].min_error <= rows[n].min_error) {
      rows[n].min_error = rows[n - 1].min_error;
      rows[n].best = rows[n - 1].best;
    }
  return rows;
}

std::vector<StrongSaturationSample> strong_saturation_samples(const ProblemSpec& problem,
                                                              const ConvergenceRecord& record, std::uint64_t seed,
                                                              int samples, std::size_t max_dofs) {
  std::vector<StrongSaturationSample> out;
  if (!has_laplace_error(problem) || record.meshes.empty()) return out;
  const Family fam = family_for(problem.kind);
  std::vector<std::size_t> eligible;
  for (std::size_t l = 0; l < record.rows.size(); ++l)
    if (record.rows[l].n_dofs <= max_dofs / 4 && record.rows[l].error_sq && *record.rows[l].error_sq > 0.0)
      eligible.push_back(l);
  if (eligible.empty()) return out;
  std::mt19937_64 rng(seed);
  auto error = [&](const Mesh& m) {
    const DiscreteSpace s(m, fam);
    const GalerkinSystem sys = assemble(problem, s);
    return std::sqrt(std::max(error_energy_sq(problem, solve(sys), s, sys), 0.0));
  };
  std::uniform_int_distribution<std::size_t> pick_level(0, eligible.size() - 1);
  std::uniform_int_distribution<int> pick_depth(1, 3);
  for (int k = 0; k < samples; ++k) {
    const std::size_t l = eligible[pick_level(rng)];
    const Mesh& tl = record.meshes[l];
    // T_h: a few rounds of random refinement concentrated on a random subset
    Mesh th = tl;
    const int depth = pick_depth(rng);
    for (int d = 0; d < depth && th.size() * 2 <= max_dofs; ++d) {
      std::bernoulli_distribution coin(0.4);
      std::vector<ElementId> marked;
      for (const Element& e : th.elements())
        if (coin(rng)) marked.push_back(e.id);
      if (marked.empty()) marked.push_back(th[0].id);
      th = refine(th, marked);
    }
    std::vector<ElementId> gone;
    for (const Element& e : tl.elements())
      if (!th.contains(e.id)) gone.push_back(e.id);
    const Mesh tH = refine(tl, gone);
    const double el = std::sqrt(*record.rows[l].error_sq);
    out.push_back({l, error(th) / el, error(tH) / el});
  }
  return out;
}

}  // namespace abem
