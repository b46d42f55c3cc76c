// Acceptance runner: one PASS/FAIL line per criterion, details indented below.
// Usage: abem_acceptance [--only N[,N...]] [--seed S]
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "abem/adaptive.hpp"
#include "abem/problems.hpp"
#include "kernel_suite.hpp"
#include "random_meshes.hpp"

using namespace abem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::string mesh_ids(const Mesh& m) {
  std::ostringstream s;
  for (const Element& e : m.elements()) s << ' ' << e.id;
  return s.str();
}

const std::vector<std::string> kRunProblems = {"slit_weaksing", "slit_hypsing", "square_weaksing", "slit_helmholtz",
                                               "slit_hypsing_helmholtz_flat"};
const std::vector<double> kThetas = {0.3, 0.5, 1.0};

bool is_laplace(const std::string& name) { return name.find("helmholtz") == std::string::npos; }

// The adaptive runs shared by criteria 3, 4, 8 and 10 to 12. Monitors that
// need the uniform refinement are on for theta = 0.5 only.
struct RunKey {
  std::string problem;
  double theta;
  bool operator<(const RunKey& o) const { return std::tie(problem, theta) < std::tie(o.problem, o.theta); }
};

struct TimedRecord {
  ConvergenceRecord record;
  double seconds = 0.0;
};

class Runs {
 public:
  const TimedRecord& get(const std::string& problem, double theta) {
    const RunKey key{problem, theta};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    AdaptiveParams params;
    params.theta = theta;
    params.fine_solve = theta == 0.5;
    params.pythagoras = theta == 0.5;
    const auto t0 = Clock::now();
    TimedRecord tr;
    tr.record = adaptive_loop(make_problem(problem), params);
    tr.seconds = seconds_since(t0);
    std::cerr << "  [run] " << problem << " theta " << theta << ": " << tr.record.rows.size() << " iterations, "
              << tr.record.rows.back().n_dofs << " dofs, " << fmt(tr.seconds, 3) << " s\n";
    return cache_.emplace(key, std::move(tr)).first->second;
  }

 private:
  std::map<RunKey, TimedRecord> cache_;
};

// 1 -------------------------------------------------------------------------
Verdict kernels(std::uint64_t seed) {
  Verdict v;
  const auto t0 = Clock::now();
  const auto r = testing_util::run_kernel_suite(seed);
  const double secs = seconds_since(t0);
  v.require(r.coincident_err <= 1e-10, "coincident pairs: max rel err " + fmt(r.coincident_err));
  v.require(r.adjacent_err <= 1e-10, "adjacent pairs: max rel err " + fmt(r.adjacent_err));
  v.require(r.random_err <= 1e-10 && r.random_pairs == 50,
            std::to_string(r.random_pairs) + " random pairs: max rel err " + fmt(r.random_err));
  v.require(r.hankel_err <= 1e-8, "H0 on (0,100], " + std::to_string(r.hankel_points) + " points: max abs err " +
                                      fmt(r.hankel_err));
  v.require(secs <= 10.0, "runtime " + fmt(secs, 3) + " s (limit 10)");
  return v;
}

// 2 -------------------------------------------------------------------------
Verdict galerkin_exactness(std::uint64_t seed) {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst_err = 0.0, worst_tau = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    // slit and square alternately
    ProblemSpec p = make_problem(trial % 2 == 0 ? "slit_weaksing" : "square_weaksing");
    auto mesh = std::make_shared<const Mesh>(testing_util::random_refinement(*p.initial_mesh, rng, 1 + trial % 4));
    Eigen::VectorXd w(static_cast<Eigen::Index>(mesh->size()));
    for (auto& x : w) x = normal(rng);
    p.rhs = Rhs::resolvable(mesh, w);
    p.reference_energy.reset();
    const DiscreteSpace space(*mesh, Family::P0);
    const GalerkinSystem sys = assemble(p, space);
    const CVector u = solve(sys);
    const double w_sq = energy_sq(sys, CVector(w.cast<std::complex<double>>()));
    const double err = std::sqrt(std::max(error_energy_sq(p, u, space, sys), 0.0) / w_sq);
    const double tau = indicators(p, space, u).total() / std::sqrt(w_sq);
    worst_err = std::max(worst_err, err);
    worst_tau = std::max(worst_tau, tau);
  }
  const double secs = seconds_since(t0);
  v.require(worst_err <= 1e-8, "10 random meshes: max ||w - u|| / ||w|| = " + fmt(worst_err));
  v.require(worst_tau <= 1e-8, "max tau / ||w|| = " + fmt(worst_tau));
  v.require(secs <= 30.0, "runtime " + fmt(secs, 3) + " s (limit 30)");
  return v;
}

// 3 -------------------------------------------------------------------------
Verdict pythagoras(Runs& runs) {
  Verdict v;
  for (const char* name : {"slit_weaksing", "slit_hypsing"}) {
    const TimedRecord& tr = runs.get(name, 0.5);
    const auto& rows = tr.record.rows;
    double worst = 0.0, worst_run = 0.0;
    std::size_t checked = 0, missing = 0;
    for (std::size_t l = 0; l + 1 < rows.size(); ++l) {
      if (!rows[l].pyth_defect) {
        ++missing;
        continue;
      }
      ++checked;
      worst = std::max(worst, *rows[l].pyth_defect);
      worst_run = std::max(worst_run, rows[l].pyth_defect_run.value_or(0.0));
    }
    v.require(missing == 0 && checked > 0 && worst <= 1e-9,
              std::string(name) + ": max defect " + fmt(worst) + " over " + std::to_string(checked) +
                  " iterations up to " + std::to_string(rows.back().n_dofs) + " dofs");
    v.note("stored double solutions of the run: max defect " + fmt(worst_run) + " relative to err_l^2");
    v.require(tr.seconds <= 300.0, std::string(name) + ": runtime " + fmt(tr.seconds, 3) + " s (limit 300)");
  }
  return v;
}

// 4 -------------------------------------------------------------------------
Verdict equivalence(Runs& runs) {
  Verdict v;
  for (const std::string& name : kRunProblems) {
    const TimedRecord& tr = runs.get(name, 0.5);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::size_t n = 0;
    for (const IterationRow& r : tr.record.rows)
      if (r.equivalence) {
        lo = std::min(lo, *r.equivalence);
        hi = std::max(hi, *r.equivalence);
        ++n;
      }
    const bool ok = n == tr.record.rows.size() && n > 0 && hi / lo <= 4.0;
    v.require(ok, name + ": tau/||u^ - u|| in [" + fmt(lo) + ", " + fmt(hi) + "], max/min " + fmt(hi / lo) +
                      " over " + std::to_string(n) + " iterations");
  }
  return v;
}

// 5 -------------------------------------------------------------------------
Verdict e_sampling(std::uint64_t seed) {
  Verdict v;
  for (const std::string& name : kRunProblems) {
    const ProblemSpec p = make_problem(name);
    const Family fam = family_for(p.kind);
    std::mt19937_64 rng(seed);
    double e1_lo = 0.0, e1_up = 0.0, e2 = 0.0;
    int zeros = 0, failures = 0;
    for (int s = 0; s < 50; ++s) {
      const Mesh coarse = testing_util::random_refinement(*p.initial_mesh, rng, static_cast<int>(rng() % 5));
      std::vector<ElementId> marked;
      std::bernoulli_distribution pick(0.4);
      for (const Element& e : coarse.elements())
        if (pick(rng)) marked.push_back(e.id);
      if (marked.empty()) marked.push_back(coarse[rng() % coarse.size()].id);
      const DiscreteSpace cs(coarse, fam);
      const E1Ratios r1 = measure_E1(p, cs, marked);
      const DiscreteSpace fs(refine(coarse, marked), fam);
      const E2Ratio r2 = measure_E2(p, cs, fs);
      if (r1.exact_zero || r2.exact_zero) ++zeros;
      e1_lo = std::max(e1_lo, r1.lower);
      e1_up = std::max(e1_up, r1.upper);
      e2 = std::max(e2, r2.ratio);
      if (r1.lower > 3.0 || r1.upper > 3.0 || r2.ratio > 5.0) {
        ++failures;
        std::ostringstream msg;
        msg << name << " counterexample: E1 " << r1.lower << " / " << r1.upper << ", E2 " << r2.ratio
            << "\n       mesh:" << mesh_ids(coarse) << "\n       marked:";
        for (ElementId id : marked) msg << ' ' << id;
        v.note(msg.str());
      }
    }
    v.require(failures == 0, name + ": 50 pairs, max E1 ratios " + fmt(e1_lo) + " (efficiency) and " + fmt(e1_up) +
                                 " (reliability), max E2 ratio " + fmt(e2) +
                                 (zeros ? ", " + std::to_string(zeros) + " with vanishing difference" : ""));
  }
  return v;
}

// 6 -------------------------------------------------------------------------
Verdict doerfler_minimality(std::uint64_t seed) {
  Verdict v;
  std::mt19937_64 rng(seed);
  const ProblemSpec p = make_problem("slit_weaksing");
  int mismatches = 0, checked = 0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Mesh mesh = *p.initial_mesh;
    const int target = 1 + static_cast<int>(rng() % 12);
    while (static_cast<int>(mesh.size()) < target) {
      const Mesh next = refine(mesh, std::vector<ElementId>{mesh[rng() % mesh.size()].id});
      if (static_cast<int>(next.size()) > 12) break;
      mesh = next;
    }
    if (target == 1) mesh = make_initial_mesh(p.geometry, 1);
    // integer and dyadic values: squares and their sums are exact, so ties
    // and the threshold are decided without rounding
    std::vector<ElementId> ids;
    std::vector<double> vals;
    for (const Element& e : mesh.elements()) {
      ids.push_back(e.id);
      vals.push_back(trial % 2 == 0 ? static_cast<double>(rng() % 6) : static_cast<double>(rng() % 4096) / 1024.0);
    }
    const double theta = trial % 10 == 0 ? 1.0 : static_cast<double>(1 + rng() % 1023) / 1024.0;
    const IndicatorSet ind(ids, vals);
    const std::size_t greedy = doerfler_mark(ind, theta).size();
    const std::size_t n = vals.size();
    long double total = 0.0L;
    for (double x : vals) total += static_cast<long double>(x) * x;
    std::size_t best = total == 0.0L ? 0 : n + 1;
    for (std::uint32_t mask = 0; total > 0.0L && mask < (1u << n); ++mask) {
      long double sum = 0.0L;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) sum += static_cast<long double>(vals[i]) * vals[i];
      if (sum >= static_cast<long double>(theta) * total)
        best = std::min<std::size_t>(best, static_cast<std::size_t>(std::popcount(mask)));
    }
    ++checked;
    largest = std::max(largest, n);
    if (greedy != best) {
      ++mismatches;
      v.note("mismatch: " + std::to_string(n) + " elements, theta " + fmt(theta) + ", greedy " +
             std::to_string(greedy) + ", minimum " + std::to_string(best));
    }
  }
  v.require(mismatches == 0, std::to_string(checked) + " random indicator vectors on meshes with up to " +
                                 std::to_string(largest) + " elements: " + std::to_string(mismatches) +
                                 " cardinality mismatches");
  return v;
}

// 7 -------------------------------------------------------------------------
Verdict mesh_axioms(std::uint64_t seed) {
  Verdict v;
  std::mt19937_64 rng(seed);
  const ProblemSpec slit = make_problem("slit_weaksing");
  const ProblemSpec square = make_problem("square_weaksing");
  auto initial = [&](int i) -> const Mesh& { return i % 2 == 0 ? *slit.initial_mesh : *square.initial_mesh; };

  // (M1): every non-root element and its sibling tile the parent exactly
  std::size_t sons_checked = 0, son_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mesh m = testing_util::random_refinement(initial(trial), rng, 1 + trial % 6);
    const InitialMesh& init = *m.initial();
    for (const Element& e : m.elements()) {
      if (e.generation == 0) continue;
      const ElementId parent = e.parent_id();
      const EdgePiece pp = element_piece(init, parent);
      const EdgePiece c0 = element_piece(init, id_child(parent, 0));
      const EdgePiece c1 = element_piece(init, id_child(parent, 1));
      const bool ok = c0.edge == pp.edge && c1.edge == pp.edge && c0.den == 2 * pp.den && c1.den == c0.den &&
                      c0.m0 == 2 * pp.m0 && c0.m1 == c1.m0 && c1.m1 == 2 * pp.m1 && c0.length + c1.length == pp.length &&
                      c0.length == c1.length;
      ++sons_checked;
      if (!ok) ++son_failures;
    }
  }
  v.require(son_failures == 0,
            "(M1) " + std::to_string(sons_checked) + " parents checked: each is the union of 2 halves");

  // (M2)
  std::size_t overlay_failures = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const Mesh& t0 = initial(trial);
    const Mesh a = testing_util::random_refinement(t0, rng, 1 + static_cast<int>(rng() % 6));
    const Mesh b = testing_util::random_refinement(t0, rng, 1 + static_cast<int>(rng() % 6));
    const Mesh o = overlay(a, b);
    const double excess =
        static_cast<double>(o.size()) - static_cast<double>(a.size() + b.size()) + static_cast<double>(t0.size());
    worst_excess = std::max(worst_excess, excess);
    if (excess > 0.0 || !is_refinement_of(o, a) || !is_refinement_of(o, b) || !is_admissible(o)) ++overlay_failures;
  }
  v.require(overlay_failures == 0, "(M2) 100 pairs: #(T + T') - #T - #T' + #T_0 <= " + fmt(worst_excess) +
                                       ", overlay refines both and is admissible");

  // (M3)
  double worst_ratio = 0.0;
  for (int seq = 0; seq < 20; ++seq) {
    Mesh m = initial(seq);
    const std::size_t n0 = m.size();
    std::size_t marked_total = 0;
    for (int step = 0; step < 20; ++step) {
      std::vector<ElementId> marked;
      // few marks, skewed towards the finest elements, to provoke closure
      const std::size_t k = 1 + rng() % 3;
      std::vector<std::size_t> order(m.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t i, std::size_t j) { return m[i].generation > m[j].generation; });
      for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
        marked.push_back(m[rng() % 2 == 0 ? order[i] : rng() % m.size()].id);
      std::sort(marked.begin(), marked.end());
      marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
      marked_total += marked.size();
      m = refine(m, marked);
      worst_ratio = std::max(worst_ratio, static_cast<double>(m.size() - n0) / static_cast<double>(marked_total));
    }
  }
  v.require(worst_ratio <= 8.0,
            "(M3) 20 sequences of 20 markings: max (#T_l - #T_0) / sum #M_j = " + fmt(worst_ratio) + " (limit 8)");
  return v;
}

// 8 -------------------------------------------------------------------------
Verdict rates(Runs& runs) {
  Verdict v;
  struct Case {
    const char* problem;
    double theta, lo, hi;
  };
  for (const Case c : {Case{"slit_weaksing", 0.5, 1.35, 1.65}, Case{"slit_weaksing", 1.0, 0.4, 0.6},
                       Case{"slit_hypsing", 0.5, 1.35, 1.65}}) {
    const TimedRecord& tr = runs.get(c.problem, c.theta);
    const RateFit tau = fit_rate(tr.record, RateQuantity::Tau);
    const RateFit err = fit_rate(tr.record, RateQuantity::Error);
    const bool ok = tau.s >= c.lo && tau.s <= c.hi && err.s >= c.lo && err.s <= c.hi;
    v.require(ok, std::string(c.problem) + ", theta " + fmt(c.theta) + ": s(tau) = " + fmt(tau.s) + ", s(error) = " +
                      fmt(err.s) + " over iterations " + std::to_string(tau.first) + ".." + std::to_string(tau.last) +
                      ", expected [" + fmt(c.lo) + ", " + fmt(c.hi) + "]");
    v.require(tr.seconds <= 300.0, std::string(c.problem) + ", theta " + fmt(c.theta) + ": runtime " +
                                       fmt(tr.seconds, 3) + " s (limit 300)");
  }
  return v;
}

// 9 -------------------------------------------------------------------------
Verdict bruteforce(Runs& runs) {
  Verdict v;
  const auto t0 = Clock::now();
  for (const char* name : {"slit_weaksing", "slit_hypsing"}) {
    const ProblemSpec p = make_problem(name);
    const std::vector<BruteForceRow> table = bruteforce_best_approx(p, 10);
    bool monotone = true;
    for (std::size_t i = 1; i < table.size(); ++i) monotone = monotone && table[i].min_error <= table[i - 1].min_error;
    v.require(monotone && table.size() == 11, std::string(name) + ": exhaustive table for N <= 10 is nonincreasing (" +
                                                  std::to_string(table.back().meshes) + " meshes at N = 10)");
    for (double theta : {0.3, 0.5}) {
      // for each N, the first adaptive mesh with #T - #T_0 >= N against the
      // optimum over #T - #T_0 <= N
      const TimedRecord& tr = runs.get(name, theta);
      const auto& rows = tr.record.rows;
      const std::size_t n0 = rows.front().n_elements;
      double worst = 0.0;
      int compared = 0;
      for (int n = 0; n <= 10; ++n) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const IterationRow& r) {
          return r.n_elements - n0 >= static_cast<std::size_t>(n);
        });
        if (it == rows.end()) break;
        worst = std::max(worst, std::sqrt(std::max(*it->error_sq, 0.0)) / table[static_cast<std::size_t>(n)].min_error);
        ++compared;
      }
      v.require(compared == 11 && worst <= 2.5, std::string(name) + ", theta " + fmt(theta) +
                                                    ": N = 0..10, max adaptive error / optimum = " + fmt(worst));
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs <= 600.0, "runtime " + fmt(secs, 3) + " s (limit 600, adaptive runs excluded)");
  return v;
}

// 10 ------------------------------------------------------------------------
Verdict plain_convergence(Runs& runs) {
  Verdict v;
  for (const std::string& name : kRunProblems) {
    for (double theta : kThetas) {
      const TimedRecord& tr = runs.get(name, theta);
      const auto& rows = tr.record.rows;
      const double tau0 = rows.front().tau, tau_end = rows.back().tau;
      // The running minimum must fall across the run; single steps where tau
      // does not set a new minimum are allowed (tau is not monotone in
      // general) and listed.
      double running = tau0;
      std::vector<std::size_t> stalls;
      for (std::size_t l = 1; l < rows.size(); ++l) {
        if (!(rows[l].tau < running)) stalls.push_back(l);
        running = std::min(running, rows[l].tau);
      }
      const bool reached = rows.back().n_dofs >= 2000;
      std::string msg = name + ", theta " + fmt(theta) + ": tau_L / tau_0 = " + fmt(tau_end / tau0) +
                        ", running minimum " + fmt(running / tau0) + " tau_0 at " +
                        std::to_string(rows.back().n_dofs) + " dofs";
      if (!stalls.empty()) {
        msg += "; no new minimum at ell =";
        for (std::size_t l : stalls) msg += " " + std::to_string(l);
      }
      v.require(reached && tau_end <= 1e-2 * tau0 && running < tau0, msg);
      if (theta == 1.0) {
        // tau ~ N^(-1/2) under uniform refinement, so 1e-2 needs N / N_0 ~ 1e4
        const double n0 = static_cast<double>(rows.front().n_dofs), n = static_cast<double>(rows.back().n_dofs);
        v.note("     uniform refinement from " + fmt(n0) + " dofs: (N_0 / N)^(1/2) = " + fmt(std::sqrt(n0 / n)) +
               ", the 1e-2 decay needs about " + fmt(1e4 * n0) + " dofs");
      }
    }
  }
  v.note("resolvable_check not run: tau_0 vanishes, the loop stops at ell = 0 (criterion 2)");
  return v;
}

// 11 ------------------------------------------------------------------------
Verdict helmholtz() {
  Verdict v;
  const ProblemSpec p = make_problem("slit_helmholtz");
  AdaptiveParams params;
  params.theta = 0.5;
  params.max_dofs = 500;
  params.fine_solve = false;
  params.pythagoras = false;
  params.helmholtz_reference = true;
  params.reference_levels = 3;
  params.reference_max_dofs = 8000;
  const auto t0 = Clock::now();
  const ConvergenceRecord rec = adaptive_loop(p, params);
  const RateFit err = fit_rate(rec, RateQuantity::Error);
  const RateFit tau = fit_rate(rec, RateQuantity::Tau);
  v.require(err.s >= 1.2 && err.s <= 1.7,
            "kappa 1, theta 0.5, " + std::to_string(rec.rows.back().n_dofs) + " dofs: error rate s = " + fmt(err.s) +
                " against a reference with " + std::to_string(rec.reference_dofs.value_or(0)) + " dofs (" +
                std::to_string(rec.reference_levels_used) + " uniform refinements), expected [1.2, 1.7]");
  v.note("estimator rate on the same run " + fmt(tau.s) + ", " + fmt(seconds_since(t0), 3) + " s");
  v.note("estimator decay for theta 0.3, 0.5, 1: see criterion 10");
  return v;
}

// 12 ------------------------------------------------------------------------
Verdict linear_convergence(Runs& runs) {
  Verdict v;
  for (const std::string& name : kRunProblems) {
    if (!is_laplace(name)) continue;
    for (double theta : kThetas) {
      const TimedRecord& tr = runs.get(name, theta);
      const LinearReport lin = linear_convergence_monitor(tr.record);
      v.require(lin.converged && lin.q_lin < 1.0 && lin.ell0 <= 5,
                name + ", theta " + fmt(theta) + ": q_lin = " + fmt(lin.q_lin) + " from ell0 = " +
                    std::to_string(lin.ell0) + (lin.failure.empty() ? "" : " (" + lin.failure + ")"));
      if (theta != 0.5) continue;
      const SaturationReport sat = saturation_monitor(tr.record);
      double worst = 0.0;
      std::vector<std::size_t> outliers;
      for (std::size_t l = lin.ell0; l < sat.ratios.size(); ++l)
        if (sat.ratios[l]) {
          worst = std::max(worst, *sat.ratios[l]);
          if (*sat.ratios[l] > 0.98) outliers.push_back(l);
        }
      std::string msg = "saturation after ell0: max ratio " + fmt(worst);
      if (outliers.empty()) msg += ", none above 0.98";
      for (std::size_t l : outliers) msg += "; above 0.98 at ell = " + std::to_string(l);
      v.note(msg);
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the adaptive BEM library"};
  std::vector<int> only;
  std::uint64_t seed = 42;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 12));
  app.add_option("--seed", seed, "seed for the sampled checks");
  std::vector<int> known;
  app.add_option("--known-failures", known, "criteria whose failure is documented and does not set the exit code")
      ->delimiter(',')
      ->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  Runs runs;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"kernel oracle suite", [&] { return kernels(seed); }},
      {"Galerkin exactness", [&] { return galerkin_exactness(seed); }},
      {"Pythagoras identity", [&] { return pythagoras(runs); }},
      {"two-level equivalence", [&] { return equivalence(runs); }},
      {"E1/E2 sampling", [&] { return e_sampling(seed); }},
      {"Dorfler minimality", [&] { return doerfler_minimality(seed); }},
      {"mesh axioms", [&] { return mesh_axioms(seed); }},
      {"rate contrast", [&] { return rates(runs); }},
      {"brute-force optimality", [&] { return bruteforce(runs); }},
      {"plain convergence", [&] { return plain_convergence(runs); }},
      {"Helmholtz", [] { return helmholtz(); }},
      {"linear convergence monitor", [&] { return linear_convergence(runs); }},
  };
  int failed = 0, tolerated = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const bool is_known = std::find(known.begin(), known.end(), id) != known.end();
    if (!v.pass) ++(is_known ? tolerated : failed);
    std::cout << "criterion " << std::setw(2) << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << " (" << fmt(seconds_since(t0), 3) << " s)" << (!v.pass && is_known ? "  [known failure]" : "") << '\n';
    for (const std::string& n : v.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
  }
  if (failed == 0 && tolerated == 0)
    std::cout << "all criteria passed\n";
  else
    std::cout << failed + tolerated << " criteria failed (" << tolerated << " known)\n";
  return failed == 0 ? 0 : 1;
}
