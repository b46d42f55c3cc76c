// abem: command-line front end for the adaptive BEM experiments.
#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "abem/harness.hpp"
#include "kernel_suite.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive 2D boundary element experiments with two-level error estimators"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the adaptive loop described by a config file");
  run->add_option("config", config_path, "key = value config file")->required();

  std::string bf_path;
  int n_max = 10;
  auto* bf = app.add_subcommand("bruteforce", "Exhaustive best approximation over small admissible meshes");
  bf->add_option("config", bf_path, "key = value config file")->required();
  bf->add_option("--n-max", n_max, "largest number of extra elements")->check(CLI::Range(0, abem::kBruteForceLimit));

  std::uint64_t seed = 42;
  auto* ck = app.add_subcommand("check-kernels", "Compare the kernels against independent oracles");
  ck->add_option("--seed", seed, "seed for the random panel pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const abem::RunConfig cfg = abem::load_config(config_path);
      const auto t0 = std::chrono::steady_clock::now();
      const abem::RunOutcome out = abem::run(cfg, std::cerr);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << out.summary;
      std::cerr << "abem: " << secs << " s, output in " << cfg.output.string() << '\n';
      return out.exit_code;
    }
    if (*bf) return abem::run_bruteforce(abem::load_config(bf_path), n_max, std::cout);
    if (*ck) {
      const auto r = testing_util::run_kernel_suite(seed);
      testing_util::print_kernel_suite(std::cout, r);
      return r.passed() ? 0 : 1;
    }
  } catch (const abem::ConfigError& e) {
    std::cerr << "abem: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "abem: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
