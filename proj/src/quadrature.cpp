#include "abem/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace abem {

namespace {

struct RuleTable {
  std::array<std::vector<double>, kMaxGaussOrder + 1> nodes;
  std::array<std::vector<double>, kMaxGaussOrder + 1> weights;
  std::array<GaussRule, kMaxGaussOrder + 1> rules;

  RuleTable() {
    for (int n = 1; n <= kMaxGaussOrder; ++n) {
      auto& x = nodes[n];
      auto& w = weights[n];
      x.resize(n);
      w.resize(n);
      for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
          double p0 = 1.0, p1 = 0.0;
          for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
          }
          dp = n * (z * p0 - p1) / (z * z - 1.0);
          const double dz = p0 / dp;
          z -= dz;
          if (std::abs(dz) < 1e-17) break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
      }
      if (n % 2 == 1) x[n / 2] = 0.0;
      rules[n] = GaussRule{x, w};
    }
  }
};

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const RuleTable table;
  if (n < 1 || n > kMaxGaussOrder) throw std::invalid_argument("gauss_legendre: order out of range");
  return table.rules[n];
}

}  // namespace abem
