#pragma once

// Fixed certificate suites: deviation and method-of-types Monte Carlo checks,
// and agreement of the dual K_inf solver with the brute-force primal.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "klbandit/dist.hpp"
#include "klbandit/divergence.hpp"
#include "klbandit/sim.hpp"

namespace klbandit {

struct DeviationSetting {
  double p;
  std::uint64_t t;
  double epsilon;
};

struct TypesSetting {
  FiniteDist nu;
  std::uint64_t k;
  double gamma;
};

inline std::vector<DeviationSetting> deviation_suite() {
  std::vector<DeviationSetting> out;
  for (double p : {0.3, 0.5}) {
    for (std::uint64_t t : {100, 1000}) {
      for (double eps : {6.0, 8.0}) out.push_back({p, t, eps});
    }
  }
  return out;
}

// Chosen so the bound (k+1)^|S| e^{-k gamma} lies in [1e-4, 1e-2].
inline std::vector<TypesSetting> types_suite() {
  return {
      {FiniteDist::bernoulli(0.5), 50, 0.3},
      {FiniteDist::make({0.0, 0.5, 1.0}, {0.25, 0.5, 0.25}), 30, 0.55},
      {FiniteDist::bernoulli(0.3), 100, 0.15},
  };
}

struct DualPrimalCase {
  FiniteDist nu;
  double mu;
  double dual = 0.0;
  double primal = 0.0;

  double gap() const { return std::abs(dual - primal); }
};

inline constexpr double kDualPrimalTolerance = 5e-4;
inline constexpr int kDualPrimalGrid = 2000;

/// `count` random distributions (alternately 2 and 3 atoms, weights >= 0.05)
/// each checked at three means between E(nu) and 1.
inline std::vector<DualPrimalCase> dual_primal_suite(std::uint64_t seed = 20240607, std::size_t count = 100,
                                                     int grid = kDualPrimalGrid) {
  RandomSource rng(seed);
  std::vector<DualPrimalCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t atoms = 2 + i % 2;
    std::vector<double> s(atoms);
    std::vector<double> w(atoms);
    double total = 0.0;
    for (std::size_t j = 0; j < atoms; ++j) {
      s[j] = rng.uniform();
      w[j] = 0.05 + rng.uniform();
      total += w[j];
    }
    for (auto& x : w) x /= total;
    const FiniteDist nu = FiniteDist::make(s, w);
    const double m = nu.mean();
    for (double frac : {0.2, 0.5, 0.8}) {
      const double mu = m + frac * (1.0 - m);
      if (!(mu < 1.0) || mu <= m) continue;
      DualPrimalCase c{nu, mu};
      c.dual = k_inf(nu, mu).value;
      c.primal = k_inf_primal(nu, mu, grid);
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace klbandit
