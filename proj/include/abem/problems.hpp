#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abem/galerkin.hpp"

namespace abem {

/// Names of the built-in problems.
std::vector<std::string> problem_names();

/// Built-in problem by name; kappa overrides the default wavenumber 1 of the
/// Helmholtz problems. Throws std::invalid_argument for unknown names.
ProblemSpec make_problem(const std::string& name, std::optional<double> kappa = std::nullopt);

/// Logarithmic capacity of a square with the given side.
double square_capacity(double side);

}  // namespace abem
