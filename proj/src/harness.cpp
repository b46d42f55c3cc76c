#include "abem/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <system_error>

#include "abem/problems.hpp"

namespace abem {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::size_t line, const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(line, "cannot parse " + key + " = '" + v + "' as a number");
  return out;
}

std::uint64_t parse_uint(std::size_t line, const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(line, "cannot parse " + key + " = '" + v + "' as a nonnegative integer");
  return out;
}

bool parse_bool(std::size_t line, const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError(line, "cannot parse " + key + " = '" + v + "' as a boolean");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::map<std::string, std::size_t> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "missing key");
    if (val.empty()) throw ConfigError(lineno, "missing value for " + key);
    if (seen.count(key)) throw ConfigError(lineno, "duplicate key " + key);
    seen[key] = lineno;

    if (key == "problem") {
      c.problem = val;
    } else if (key == "theta") {
      c.theta = parse_double(lineno, key, val);
      if (!(c.theta > 0.0 && c.theta <= 1.0)) throw ConfigError(lineno, "theta out of (0,1]");
    } else if (key == "c_mark") {
      c.c_mark = parse_double(lineno, key, val);
      if (!(c.c_mark >= 1.0)) throw ConfigError(lineno, "c_mark must be >= 1");
    } else if (key == "max_dofs") {
      c.max_dofs = parse_uint(lineno, key, val);
      if (c.max_dofs == 0) throw ConfigError(lineno, "max_dofs must be positive");
    } else if (key == "tau_threshold") {
      c.tau_threshold = parse_double(lineno, key, val);
      if (!(c.tau_threshold >= 0.0) || std::isinf(c.tau_threshold))
        throw ConfigError(lineno, "tau_threshold must be finite and nonnegative");
    } else if (key == "max_iterations") {
      c.max_iterations = parse_uint(lineno, key, val);
      if (c.max_iterations == 0) throw ConfigError(lineno, "max_iterations must be positive");
    } else if (key == "kappa") {
      c.kappa = parse_double(lineno, key, val);
      if (!(*c.kappa > 0.0) || std::isinf(*c.kappa)) throw ConfigError(lineno, "kappa must be positive");
    } else if (key == "saturation") {
      c.saturation = parse_bool(lineno, key, val);
    } else if (key == "pythagoras") {
      c.pythagoras = parse_bool(lineno, key, val);
    } else if (key == "e_sampling") {
      c.e_sampling = parse_bool(lineno, key, val);
    } else if (key == "e_samples") {
      c.e_samples = static_cast<int>(parse_uint(lineno, key, val));
      if (c.e_samples > 1000) throw ConfigError(lineno, "e_samples above 1000");
    } else if (key == "spot_checks") {
      c.spot_checks = static_cast<int>(parse_uint(lineno, key, val));
      if (c.spot_checks > 1000) throw ConfigError(lineno, "spot_checks above 1000");
    } else if (key == "reference") {
      c.reference = parse_bool(lineno, key, val);
    } else if (key == "reference_levels") {
      c.reference_levels = static_cast<int>(parse_uint(lineno, key, val));
      if (c.reference_levels < 1 || c.reference_levels > 5) throw ConfigError(lineno, "reference_levels out of [1,5]");
    } else if (key == "reference_max_dofs") {
      c.reference_max_dofs = parse_uint(lineno, key, val);
      if (c.reference_max_dofs == 0) throw ConfigError(lineno, "reference_max_dofs must be positive");
    } else if (key == "output") {
      c.output = val;
    } else if (key == "seed") {
      c.seed = parse_uint(lineno, key, val);
    } else if (key == "tol") {
      c.tol = parse_double(lineno, key, val);
      if (!(c.tol >= 1e-14 && c.tol <= 1e-6)) throw ConfigError(lineno, "tol out of [1e-14, 1e-6]");
    } else {
      throw ConfigError(lineno, "unknown key '" + key + "'");
    }
  }
  if (c.problem.empty()) throw ConfigError(0, "problem required");
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end())
    throw ConfigError(seen["problem"], "unknown problem '" + c.problem + "'");
  if (c.kappa && c.problem != "slit_helmholtz" && c.problem != "slit_hypsing_helmholtz_flat")
    throw ConfigError(seen["kappa"], "problem '" + c.problem + "' takes no kappa");
  const ProblemSpec p = make_problem(c);
  const std::size_t initial_dofs = DiscreteSpace(*p.initial_mesh, family_for(p.kind)).dofs();
  if (c.max_dofs < initial_dofs)
    throw ConfigError(seen.count("max_dofs") ? seen["max_dofs"] : 0,
                      "max_dofs below the " + std::to_string(initial_dofs) + " dofs of the initial mesh");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ProblemSpec make_problem(const RunConfig& config) {
  ProblemSpec p = make_problem(config.problem, config.kappa);
  p.tol = config.tol;
  p.validate();
  return p;
}

AdaptiveParams adaptive_params(const RunConfig& config) {
  AdaptiveParams a;
  a.theta = config.theta;
  a.c_mark = config.c_mark;
  a.max_dofs = config.max_dofs;
  a.tau_threshold = config.tau_threshold;
  a.max_iterations = config.max_iterations;
  a.fine_solve = config.saturation;
  a.pythagoras = config.pythagoras;
  a.helmholtz_reference = config.reference;
  a.reference_levels = config.reference_levels;
  a.reference_max_dofs = config.reference_max_dofs;
  a.validate();
  return a;
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

}  // namespace

void write_record_csv(std::ostream& out, const ConvergenceRecord& record) {
  out << "ell,n_elements,n_dofs,tau,n_marked,energy_sq,error_sq,sat_ratio,lin_ratio,pyth_defect\n";
  out << std::setprecision(17);
  for (const IterationRow& r : record.rows) {
    out << r.ell << ',' << r.n_elements << ',' << r.n_dofs << ',' << r.tau << ',' << r.n_marked << ','
        << r.energy_sq << ',';
    put(out, r.error_sq);
    out << ',';
    put(out, r.sat_ratio);
    out << ',';
    put(out, r.lin_ratio);
    out << ',';
    put(out, r.pyth_defect);
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

struct Band {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::size_t n = 0;
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++n;
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

}  // namespace

RunOutcome run(const RunConfig& config, std::ostream& log) {
  const ProblemSpec problem = make_problem(config);
  const AdaptiveParams params = adaptive_params(config);
  RunOutcome out;
  log << "abem: " << problem.name << ", theta " << params.theta << ", max_dofs " << params.max_dofs << '\n';
  out.record = adaptive_loop(problem, params);
  const ConvergenceRecord& rec = out.record;
  const Family fam = family_for(problem.kind);

  std::vector<Check> checks;
  std::ostringstream md;
  md << "# Run summary: " << problem.name << "\n\n";
  md << "| parameter | value |\n|---|---|\n";
  md << "| kind | " << to_string(problem.kind) << " |\n";
  if (problem.kappa) md << "| kappa | " << problem.kappa->value() << " |\n";
  md << "| theta | " << params.theta << " |\n| c_mark | " << params.c_mark << " |\n";
  md << "| max_dofs | " << params.max_dofs << " |\n| tau threshold (relative) | " << params.tau_threshold << " |\n";
  md << "| quadrature tol | " << problem.tol << " |\n| seed | " << config.seed << " |\n";
  if (problem.reference_energy)
    md << "| reference energy | " << fmt(*problem.reference_energy, 15) << " (" << problem.reference_note << ") |\n";
  md << "\n";

  md << "## Run\n\n";
  md << "- iterations: " << rec.rows.size() << "\n- stop: " << rec.stop_reason << "\n";
  if (rec.failed_at) md << "- failure: " << rec.failure << "\n";
  if (!rec.rows.empty()) {
    const IterationRow& first = rec.rows.front();
    const IterationRow& last = rec.rows.back();
    md << "- dofs: " << first.n_dofs << " -> " << last.n_dofs << "\n";
    md << "- tau: " << fmt(first.tau) << " -> " << fmt(last.tau) << " (ratio " << fmt(last.tau / first.tau) << ")\n";
    if (rec.reference_dofs)
      md << "- Helmholtz reference: " << *rec.reference_dofs << " dofs (" << rec.reference_levels_used
         << " uniform refinements of the final mesh)\n";
  }
  md << "\n";

  // Rates
  md << "## Rates\n\n";
  for (auto [q, label] : {std::pair{RateQuantity::Tau, "tau"}, std::pair{RateQuantity::Error, "error"}}) {
    try {
      const RateFit f = fit_rate(rec, q, 0.5);
      md << "- " << label << ": s = " << fmt(f.s) << " over iterations " << f.first << ".." << f.last
         << " (log residual " << fmt(f.residual, 2) << (f.excluded ? ", " + std::to_string(f.excluded) + " excluded" : "")
         << ")\n";
    } catch (const std::invalid_argument& e) {
      md << "- " << label << ": not fitted (" << e.what() << ")\n";
    }
  }
  md << "\n";

  // Monitors
  md << "## Monitors\n\n";
  const LinearReport lin = linear_convergence_monitor(rec);
  if (lin.converged)
    md << "- linear convergence: q_lin = " << fmt(lin.q_lin) << " from ell0 = " << lin.ell0 << "\n";
  else
    md << "- linear convergence: not established (" << lin.failure << ")\n";
  if (lin.pyth_defect)
    md << "- Pythagoras defect (common system, extended precision): " << fmt(*lin.pyth_defect, 3)
       << " relative to err_l^2\n";
  if (lin.pyth_defect_run)
    md << "- Pythagoras defect (stored double solutions): " << fmt(*lin.pyth_defect_run, 3) << " relative to err_l^2, "
       << fmt(lin.pyth_defect_run_norm.value_or(0.0), 3) << " relative to ||u_l+1||^2\n";
  const SaturationReport sat = saturation_monitor(rec);
  if (sat.q_sat) {
    md << "- saturation: max ratio " << fmt(*sat.q_sat);
    if (lin.converged) {
      double after = 0.0;
      std::vector<std::size_t> outliers;
      for (std::size_t l = lin.ell0; l < sat.ratios.size(); ++l)
        if (sat.ratios[l]) {
          after = std::max(after, *sat.ratios[l]);
          if (*sat.ratios[l] > 0.98) outliers.push_back(l);
        }
      md << ", max after ell0 " << fmt(after) << ", above 0.98 at " << outliers.size() << " iteration(s)";
    }
    md << "\n";
  }
  if (!sat.flagged.empty()) md << "- vanishing error at " << sat.flagged.size() << " iteration(s)\n";
  Band eq;
  for (const IterationRow& r : rec.rows)
    if (r.equivalence) eq.add(*r.equivalence);
  if (eq.n)
    md << "- tau / ||u^ - u|| in [" << fmt(eq.lo) << ", " << fmt(eq.hi) << "], max/min " << fmt(eq.hi / eq.lo) << "\n";

  if (config.e_sampling && !rec.rows.empty()) {
    Band lo, hi, stab;
    std::size_t zero = 0;
    std::vector<std::size_t> levels;
    for (std::size_t l = 0; l + 1 < rec.rows.size(); ++l)
      if (rec.rows[l].n_dofs <= 256) levels.push_back(l);
    std::mt19937_64 rng(config.seed);
    std::shuffle(levels.begin(), levels.end(), rng);
    levels.resize(std::min<std::size_t>(levels.size(), static_cast<std::size_t>(config.e_samples)));
    std::sort(levels.begin(), levels.end());
    for (std::size_t l : levels) {
      const DiscreteSpace coarse(rec.meshes[l], fam), fine(rec.meshes[l + 1], fam);
      const E1Ratios e1 = measure_E1(problem, coarse, rec.marked[l]);
      const E2Ratio e2 = measure_E2(problem, coarse, fine);
      if (e1.exact_zero || e2.exact_zero) {
        ++zero;
        continue;
      }
      lo.add(e1.lower);
      hi.add(e1.upper);
      stab.add(e2.ratio);
    }
    if (lo.n)
      md << "- (E1) on " << lo.n << " steps: tau(M)/||u_l+1 - u_l|| <= " << fmt(lo.hi)
         << ", ||u_l+1 - u_l||/tau(T_l \\ T_l+1) <= " << fmt(hi.hi) << "; (E2) ratio <= " << fmt(stab.hi) << "\n";
    if (zero) md << "- (E1)/(E2): " << zero << " exact-zero step(s)\n";
  }
  if (config.spot_checks > 0) {
    const auto samples = strong_saturation_samples(problem, rec, config.seed, config.spot_checks);
    if (!samples.empty()) {
      double worst = 0.0;
      for (const auto& s : samples) worst = std::max(worst, s.ratio_H);
      md << "- strong saturation, " << samples.size() << " samples: ||u - u_H||/||u - u_l|| <= " << fmt(worst)
         << "\n";
    }
  }
  md << "\n";

  // Hard invariants
  bool monotone = true;
  for (std::size_t l = 1; l < rec.rows.size(); ++l) monotone = monotone && rec.rows[l].n_elements >= rec.rows[l - 1].n_elements;
  checks.push_back({"element counts nondecreasing", monotone, ""});
  bool refined = true;
  for (std::size_t l = 0; l + 1 < rec.meshes.size(); ++l)
    for (ElementId id : rec.marked[l]) refined = refined && !rec.meshes[l + 1].contains(id);
  checks.push_back({"marked elements are refined", refined, ""});
  bool additive = true;
  for (std::size_t l = 0; l < rec.estimates.size(); ++l) {
    const IndicatorSet& ind = rec.estimates[l];
    std::vector<ElementId> rest;
    for (ElementId id : ind.ids())
      if (std::find(rec.marked[l].begin(), rec.marked[l].end(), id) == rec.marked[l].end()) rest.push_back(id);
    const double total = ind.total_sq();
    additive = additive &&
               std::abs(ind.subset_sq(rec.marked[l]) + ind.subset_sq(rest) - total) <= 1e-14 * total;
  }
  checks.push_back({"indicator subsets add up", additive, ""});
  bool marking = true;
  for (std::size_t l = 0; l < rec.estimates.size(); ++l)
    if (!rec.marked[l].empty())
      marking = marking &&
                rec.estimates[l].subset_sq(rec.marked[l]) >= params.theta * rec.estimates[l].total_sq() * (1 - 1e-14);
  checks.push_back({"Dorfler criterion holds", marking, ""});
  if (problem.rhs.is_resolvable() && !rec.rows.empty()) {
    double worst = 0.0;
    for (std::size_t l = 0; l < rec.estimates.size(); ++l) {
      const double unorm = std::sqrt(std::max(rec.rows[l].energy_sq, 0.0));
      for (double v : rec.estimates[l].values()) worst = std::max(worst, v / unorm);
    }
    checks.push_back({"all indicators <= 1e-9", worst <= 1e-9, "max tau(T)/||u|| = " + fmt(worst, 3)});
  }
  if (rec.failed_at) checks.push_back({"solver", false, rec.failure});

  md << "## Checks\n\n";
  for (const Check& c : checks) {
    md << "- " << (c.passed ? "PASS" : "FAIL") << " " << c.name;
    if (!c.detail.empty()) md << " (" << c.detail << ")";
    md << "\n";
    out.hard_checks_passed = out.hard_checks_passed && c.passed;
  }
  out.summary = md.str();

  std::filesystem::create_directories(config.output / "meshes");
  std::ostringstream csv;
  write_record_csv(csv, rec);
  write_file_atomic(config.output / "record.csv", csv.str());
  write_file_atomic(config.output / "summary.md", out.summary);
  if (!rec.meshes.empty()) {
    std::ostringstream a, b;
    dump_mesh(a, rec.meshes.front());
    dump_mesh(b, rec.meshes.back());
    write_file_atomic(config.output / "meshes" / "first.txt", a.str());
    write_file_atomic(config.output / "meshes" / "last.txt", b.str());
  }
  out.exit_code = rec.failed_at ? 2 : (out.hard_checks_passed ? 0 : 1);
  log << "abem: " << rec.rows.size() << " iterations, " << rec.stop_reason << ", exit " << out.exit_code << '\n';
  return out;
}

int run_bruteforce(const RunConfig& config, int n_max, std::ostream& out) {
  const ProblemSpec problem = make_problem(config);
  const auto rows = bruteforce_best_approx(problem, n_max);
  std::ostringstream csv;
  csv << "n_extra,meshes,min_error\n" << std::setprecision(17);
  out << "N  meshes  min error\n";
  for (const BruteForceRow& r : rows) {
    csv << r.n_extra << ',' << r.meshes << ',' << r.min_error << '\n';
    out << std::setw(2) << r.n_extra << std::setw(8) << r.meshes << "  " << std::setprecision(6) << r.min_error
        << '\n';
  }
  std::filesystem::create_directories(config.output);
  write_file_atomic(config.output / "bruteforce.csv", csv.str());
  return 0;
}

}  // namespace abem
