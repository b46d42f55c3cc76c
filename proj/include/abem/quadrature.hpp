#pragma once

#include <span>

namespace abem {

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct GaussRule {
  std::span<const double> nodes;
  std::span<const double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kMaxGaussOrder = 32;

/// Returns the n-point rule, 1 <= n <= kMaxGaussOrder. Tables are built once.
const GaussRule& gauss_legendre(int n);

}  // namespace abem
