#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "abem/adaptive.hpp"

namespace abem {

struct RunConfig {
  std::string problem;
  double theta = 0.5;
  double c_mark = 1.0;
  std::size_t max_dofs = 2000;
  double tau_threshold = 1e-9;
  std::size_t max_iterations = 500;
  std::optional<double> kappa;
  bool saturation = true;  // solve on the uniform refinement every step
  bool pythagoras = true;
  bool e_sampling = false;  // (E1)/(E2) ratios along the run
  int e_samples = 10;
  int spot_checks = 0;  // strong saturation samples
  bool reference = true;  // Helmholtz reference solution
  int reference_levels = 3;
  std::size_t reference_max_dofs = 4500;
  std::filesystem::path output = "abem_out";
  std::uint64_t seed = 42;
  double tol = 1e-12;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  /// 0 for errors not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// `key = value` lines with `#` comments; unknown keys, bad values and
/// violated invariants raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

ProblemSpec make_problem(const RunConfig& config);
AdaptiveParams adaptive_params(const RunConfig& config);

/// CSV with one row per iteration; empty fields for monitors that are off.
void write_record_csv(std::ostream& out, const ConvergenceRecord& record);

/// Writes content to path via a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct RunOutcome {
  ConvergenceRecord record;
  std::string summary;
  bool hard_checks_passed = true;
  int exit_code = 0;
};

/// Runs the adaptive loop and writes record.csv, summary.md and meshes/
/// under config.output. Progress goes to `log`.
RunOutcome run(const RunConfig& config, std::ostream& log);

/// Exhaustive table for `abem bruteforce`, also written to bruteforce.csv.
int run_bruteforce(const RunConfig& config, int n_max, std::ostream& out);

}  // namespace abem
