#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "klbandit/dist.hpp"
#include "klbandit/divergence.hpp"
#include "klbandit/error.hpp"

namespace klbandit {

// f(t) schedules: LogT is log t, Theorem1 is log((e t) log^3(e t)).
enum class ExplorationKind { LogT, Theorem1 };

inline std::string_view to_string(ExplorationKind kind) {
  return kind == ExplorationKind::LogT ? "log_t" : "theorem1";
}

inline double exploration(ExplorationKind kind, std::int64_t t) {
  if (t < 1) throw Error(ErrorKind::NonPositiveT, "exploration needs t >= 1, got " + std::to_string(t));
  const double lt = std::log(static_cast<double>(t));
  if (kind == ExplorationKind::LogT) return lt;
  // log(e t) + 3 log(log(e t)), with log(e t) = 1 + log t; exactly 1 at t = 1.
  return 1.0 + lt + 3.0 * std::log1p(lt);
}

namespace detail {

inline constexpr int kIndexMaxIterations = 200;
// Relative: the bracket stops at a few ulps of the root.
inline constexpr double kIndexBracketTolerance = 4.0 * std::numeric_limits<double>::epsilon();
inline constexpr double kIndexRightEnd = 1.0 - 1e-15;

// Largest q in [lo, right_end] with g(q) <= 0 for an increasing g whose value
// at lo is <= 0. `eval(q)` returns {g(q), g'(q)}. `hi` must satisfy g(hi) >= 0.
template <class Eval>
double solve_increasing(double lo, double hi, Eval&& eval) {
  double q = hi;
  double best_feasible = lo;
  for (int it = 0; it < kIndexMaxIterations; ++it) {
    const auto [g, dg] = eval(q);
    if (g <= 0.0) {
      best_feasible = q;
      lo = q;
      if (g == 0.0) return q;
    } else {
      hi = q;
    }
    if (hi - lo <= kIndexBracketTolerance * hi) break;
    const double newton = q - g / dg;
    if (std::isfinite(newton) && newton > lo && newton < hi) {
      // Newton stalls once the residual is at rounding level.
      if (std::abs(newton - q) <= 4.0 * std::numeric_limits<double>::epsilon() * q) {
        if (g <= 0.0) return q;
        // Walk down to the feasible side of the root.
        q = std::nextafter(q, lo);
        continue;
      }
      q = newton;
    } else {
      q = 0.5 * (lo + hi);
    }
  }
  return best_feasible;
}

// Pinsker: both K(beta(p), beta(q)) and K_inf(nu, q) are >= 2 (q - mean)^2, so
// the index is at most mean + sqrt(threshold / (2 n)).
inline double pinsker_cap(double mean, std::uint64_t n, double threshold) noexcept {
  return mean + std::sqrt(threshold / (2.0 * static_cast<double>(n)));
}

}  // namespace detail

/// Largest q in [0,1] with n * K(beta(p_hat), beta(q)) <= threshold.
inline double b_plus_bernoulli(double p_hat, std::uint64_t n, double threshold) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw Error(ErrorKind::ValueOutOfRange, "p_hat = " + std::to_string(p_hat));
  if (n == 0) throw Error(ErrorKind::ValueOutOfRange, "index needs n >= 1");
  if (!(threshold > 0.0) || p_hat >= 1.0) return p_hat;
  const double nd = static_cast<double>(n);
  const auto eval = [&](double q) {
    const double g = nd * kl_bernoulli(p_hat, q) - threshold;
    const double dg = nd * (q - p_hat) / (q * (1.0 - q));
    return std::pair{g, dg};
  };
  double lo = p_hat;
  double hi = detail::pinsker_cap(p_hat, n, threshold);
  if (hi >= detail::kIndexRightEnd) {
    // kl(p, q) diverges as q -> 1, so the root stays below 1.
    hi = std::nextafter(1.0, 0.0);
    if (eval(hi).first <= 0.0) return hi;
    if (eval(detail::kIndexRightEnd).first <= 0.0) lo = detail::kIndexRightEnd;
  }
  return detail::solve_increasing(lo, hi, eval);
}

/// Largest q in [0,1] with n * K_inf(nu_hat, q) <= threshold, given nu_hat as
/// parallel support/weight arrays. dK_inf/dq equals the dual maximizer
/// lambda*(q), which drives the Newton steps.
inline double b_plus_kinf(std::span<const double> support, std::span<const double> weights, std::uint64_t n,
                          double threshold) {
  if (n == 0) throw Error(ErrorKind::ValueOutOfRange, "index needs n >= 1");
  double m = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) m += weights[i] * support[i];
  m = std::clamp(m, 0.0, 1.0);
  if (m >= 1.0) return 1.0;
  if (!(threshold > 0.0)) return m;
  const double nd = static_cast<double>(n);
  const auto eval = [&](double q) {
    const KinfResult r = k_inf(support, weights, q);
    return std::pair{nd * r.value - threshold, nd * r.lambda_star};
  };
  double lo = m;
  double hi = detail::pinsker_cap(m, n, threshold);
  if (hi >= detail::kIndexRightEnd) {
    // K_inf(nu, q) diverges as q -> 1 unless nu is a Dirac at 1.
    hi = std::nextafter(1.0, 0.0);
    if (eval(hi).first <= 0.0) return hi;
    if (eval(detail::kIndexRightEnd).first <= 0.0) lo = detail::kIndexRightEnd;
  }
  return detail::solve_increasing(lo, hi, eval);
}

inline double b_plus_kinf(const FiniteDist& nu_hat, std::uint64_t n, double threshold) {
  return b_plus_kinf(nu_hat.support(), nu_hat.weights(), n, threshold);
}

}  // namespace klbandit
