#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "klbandit/dist.hpp"
#include "klbandit/error.hpp"

namespace klbandit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// KL divergence between Bernoulli(p) and Bernoulli(q), in nats, with
/// 0 log 0 = 0 and +inf when absolute continuity fails.
inline double kl_bernoulli(double p, double q) noexcept {
  if (p == q) return 0.0;
  double r = 0.0;
  if (p > 0.0) {
    if (q <= 0.0) return kInf;
    r += p * std::log(p / q);
  }
  if (p < 1.0) {
    if (q >= 1.0) return kInf;
    r += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return r > 0.0 ? r : 0.0;
}

/// KL divergence K(nu, kappa) between finitely supported distributions.
inline double kl_discrete(const FiniteDist& nu, const FiniteDist& kappa) noexcept {
  const auto xs = nu.support();
  const auto ws = nu.weights();
  const auto ys = kappa.support();
  const auto vs = kappa.weights();
  double r = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (j < ys.size() && ys[j] < xs[i]) ++j;
    if (j == ys.size() || ys[j] != xs[i]) return kInf;
    r += ws[i] * std::log(ws[i] / vs[j]);
  }
  return r > 0.0 ? r : 0.0;
}

struct KinfResult {
  double value = 0.0;        // nats
  double lambda_star = 0.0;  // maximizer of the dual, in [0, 1/(1-mu)]
  bool boundary = false;     // lambda_star == 1/(1-mu)
};

namespace detail {

inline constexpr double kDualDerivativeTolerance = 1e-12;
inline constexpr double kDualBracketTolerance = 1e-14;
inline constexpr int kDualMaxIterations = 200;

// Dual objective E[log(1 + lambda (mu - X))].
inline double dual_objective(std::span<const double> support, std::span<const double> weights, double mu,
                             double lambda) noexcept {
  double v = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (weights[i] > 0.0) v += weights[i] * std::log1p(lambda * (mu - support[i]));
  }
  return v;
}

}  // namespace detail

/// K_inf(nu, mu) for a distribution given as parallel support/weight arrays
/// (weights may contain zeros). Solves the concave dual
///   max_{lambda in [0, 1/(1-mu)]} E[log(1 + lambda (mu - X))]
/// by safeguarded Newton on its decreasing derivative.
inline KinfResult k_inf(std::span<const double> support, std::span<const double> weights, double mu) {
  if (!(mu >= 0.0 && mu < 1.0)) throw Error(ErrorKind::MuOutOfRange, "mu = " + std::to_string(mu) + " not in [0,1)");

  double m = 0.0;
  bool mass_at_one = false;
  for (std::size_t i = 0; i < support.size(); ++i) {
    m += weights[i] * support[i];
    if (support[i] >= 1.0 && weights[i] > 0.0) mass_at_one = true;
  }
  if (m >= mu) return {};

  const double cap = -std::log1p(-mu);
  const double lambda_max = 1.0 / (1.0 - mu);

  // Boundary alternative: lambda* = 1/(1-mu) iff E[(1-mu)/(1-X)] <= 1, with the
  // expectation infinite as soon as X = 1 has mass.
  if (!mass_at_one) {
    double e = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (weights[i] > 0.0) e += weights[i] * (1.0 - mu) / (1.0 - support[i]);
    }
    if (e <= 1.0) {
      double v = 0.0;
      for (std::size_t i = 0; i < support.size(); ++i) {
        if (weights[i] > 0.0) v += weights[i] * std::log((1.0 - support[i]) / (1.0 - mu));
      }
      return {std::clamp(v, 0.0, cap), lambda_max, true};
    }
  }

  double lo = 0.0;
  double hi = lambda_max;
  double curvature0 = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) curvature0 += weights[i] * (mu - support[i]) * (mu - support[i]);
  double lambda = curvature0 > 0.0 ? (mu - m) / curvature0 : 0.5 * hi;
  if (!(lambda > lo && lambda < hi)) lambda = 0.5 * (lo + hi);

  for (int it = 0; it < detail::kDualMaxIterations; ++it) {
    double d1 = 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!(weights[i] > 0.0)) continue;
      const double a = mu - support[i];
      const double inv = 1.0 / (1.0 + lambda * a);
      d1 += weights[i] * a * inv;
      d2 -= weights[i] * a * a * inv * inv;
    }
    if (std::abs(d1) <= detail::kDualDerivativeTolerance) break;
    if (d1 > 0.0) {
      lo = lambda;
    } else {
      hi = lambda;
    }
    if (hi - lo <= detail::kDualBracketTolerance * std::max(1.0, hi)) {
      lambda = d1 > 0.0 ? lo : hi;
      break;
    }
    const double newton = lambda - d1 / d2;
    lambda = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }

  const double v = detail::dual_objective(support, weights, mu, lambda);
  return {std::clamp(v, 0.0, cap), lambda, false};
}

inline KinfResult k_inf(const FiniteDist& nu, double mu) { return k_inf(nu.support(), nu.weights(), mu); }

/// Brute-force primal K_inf: minimizes K(nu, nu') over a simplex grid of nu'
/// supported on support(nu) plus the point 1, subject to E(nu') >= mu.
/// At the optimum the mean constraint binds, so two weights are solved from
/// the normalization and mean equations and the remaining ones are gridded
/// with `grid` steps per dimension. Desk-scale only (|support| + 1 <= 4).
inline double k_inf_primal(const FiniteDist& nu, double mu, int grid) {
  if (!(mu >= 0.0 && mu < 1.0)) throw Error(ErrorKind::MuOutOfRange, "mu = " + std::to_string(mu) + " not in [0,1)");
  if (grid < 100) throw Error(ErrorKind::ValueOutOfRange, "primal grid must be >= 100");
  if (nu.size() + 1 > 4) {
    throw Error(ErrorKind::SupportTooLarge, "primal oracle handles at most 3 support points, got " + std::to_string(nu.size()));
  }
  if (nu.mean() >= mu) return 0.0;

  std::vector<double> pts(nu.support().begin(), nu.support().end());
  std::vector<double> w(nu.weights().begin(), nu.weights().end());
  if (pts.back() < 1.0) {
    pts.push_back(1.0);
    w.push_back(0.0);
  }
  const std::size_t m = pts.size();
  const double p0 = pts.front();  // < 1 because mean(nu) < mu < 1

  // KL for candidate weights v; +inf when v misses an atom of nu or is infeasible.
  const auto objective = [&](std::span<const double> v) {
    double r = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] > 0.0) {
        if (!(v[i] > 0.0)) return kInf;
        r += w[i] * std::log(w[i] / v[i]);
      }
    }
    return r;
  };

  std::vector<double> v(m, 0.0);
  // Solve v[0] and v[m-1] from sum(v) = 1 and sum(v x) = mu, given the middle weights.
  const auto solve_ends = [&]() {
    double rest = 1.0;
    double rest_mean = mu;
    for (std::size_t i = 1; i + 1 < m; ++i) {
      rest -= v[i];
      rest_mean -= v[i] * pts[i];
    }
    v[m - 1] = (rest_mean - rest * p0) / (1.0 - p0);
    v[0] = rest - v[m - 1];
    return v[0] >= 0.0 && v[m - 1] >= 0.0;
  };

  double best = kInf;
  const double h = 1.0 / grid;
  if (m == 2) {
    if (solve_ends()) best = objective(v);
  } else if (m == 3) {
    for (int i = 0; i <= grid; ++i) {
      v[1] = i * h;
      if (solve_ends()) best = std::min(best, objective(v));
    }
  } else {
    for (int i = 0; i <= grid; ++i) {
      v[1] = i * h;
      for (int j = 0; i + j <= grid; ++j) {
        v[2] = j * h;
        if (solve_ends()) best = std::min(best, objective(v));
      }
    }
  }
  return std::max(best, 0.0);
}

}  // namespace klbandit
