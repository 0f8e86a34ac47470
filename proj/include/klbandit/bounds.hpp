#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "klbandit/divergence.hpp"
#include "klbandit/error.hpp"
#include "klbandit/indices.hpp"
#include "klbandit/sim.hpp"

namespace klbandit {

struct BoundTerm {
  std::size_t arm = 0;
  std::string term;
  double value = 0.0;
  bool approximate = false;
};

// Expected-pull bound for one suboptimal arm and its gap-weighted share of the regret bound.
struct ArmBound {
  std::size_t arm = 0;
  double gap = 0.0;
  double pull_bound = 0.0;
  double contribution = 0.0;
  double c = 0.0;
  double epsilon = 0.0;
};

struct BoundReport {
  std::string name;
  std::uint64_t horizon = 0;
  std::vector<ArmBound> arms;
  std::vector<BoundTerm> terms;
  double total = 0.0;
  std::string exploration;   // f used by the bounded strategy, when relevant
  std::string special_case;  // non-empty when a closed-form degenerate case applied

  const ArmBound* find_arm(std::size_t a) const {
    for (const auto& ab : arms) {
      if (ab.arm == a) return &ab;
    }
    return nullptr;
  }
};

namespace detail {

inline void finish(BoundReport& report) {
  report.total = 0.0;
  for (const auto& a : report.arms) report.total += a.contribution;
}

inline void require_horizon(std::uint64_t horizon) {
  if (horizon < 2) throw Error(ErrorKind::HorizonTooSmall, "bounds need T >= 2");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Asymptotic lower bound.

/// Per-arm Delta_a / K_inf(nu_a, mu*) terms of the regret-per-log(T) floor.
inline BoundReport lower_bound_report(const BanditInstance& instance) {
  const double mu_star = instance.mu_star();
  BoundReport report;
  report.name = "lower_bound_slope";
  bool any_suboptimal = false;
  for (std::size_t a = 0; a < instance.size(); ++a) any_suboptimal |= !instance.is_optimal(a);
  if (any_suboptimal && mu_star >= 1.0) {
    throw Error(ErrorKind::DegenerateInstance, "mu* = 1: K_inf is only defined for mu < 1");
  }
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    const double kinf = k_inf(instance.arm(a), mu_star).value;
    if (!(kinf > 0.0)) throw Error(ErrorKind::DegenerateInstance, "K_inf vanishes for arm " + std::to_string(a));
    const double pulls = 1.0 / kinf;  // per unit of log T
    report.arms.push_back({a, instance.gap(a), pulls, instance.gap(a) * pulls, 0.0, 0.0});
    report.terms.push_back({a, "k_inf", kinf});
    report.terms.push_back({a, "slope", instance.gap(a) * pulls});
  }
  detail::finish(report);
  return report;
}

inline double lower_bound_slope(const BanditInstance& instance) { return lower_bound_report(instance).total; }

// ---------------------------------------------------------------------------
// Bernoulli K-strategy bound.

/// 4e sum_{t=K}^{T-1} ceil(f(t) log t) e^{-f(t)} with f the Theorem1 schedule.
inline double theorem1_deviation_sum(std::size_t num_arms, std::uint64_t horizon) {
  double s = 0.0;
  for (std::uint64_t t = std::max<std::uint64_t>(num_arms, 1); t + 1 <= horizon; ++t) {
    const double f = exploration(ExplorationKind::Theorem1, static_cast<std::int64_t>(t));
    s += std::ceil(f * std::log(static_cast<double>(t))) * std::exp(-f);
  }
  return 4.0 * std::numbers::e * s;
}

namespace detail {

inline void require_bernoulli(const BanditInstance& instance) {
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (!instance.arm(a).is_bernoulli()) {
      throw Error(ErrorKind::NotBernoulli, "arm " + std::to_string(a) + " is not supported on {0,1}");
    }
  }
}

// mu* in {0,1}: the regret is 0, respectively at most 2(|A|-1).
inline std::optional<BoundReport> theorem1_special_case(const BanditInstance& instance, std::uint64_t horizon) {
  const double mu_star = instance.mu_star();
  if (mu_star > 0.0 && mu_star < 1.0) return std::nullopt;
  BoundReport report;
  report.name = "theorem1";
  report.horizon = horizon;
  report.exploration = std::string(to_string(ExplorationKind::Theorem1));
  if (mu_star <= 0.0) {
    report.special_case = "mu_star_zero";
    report.total = 0.0;
  } else {
    report.special_case = "mu_star_one";
    report.total = 2.0 * static_cast<double>(instance.size() - 1);
  }
  return report;
}

struct Theorem1Arm {
  double main = 0.0;
  double variance = 0.0;
};

inline Theorem1Arm theorem1_arm_terms(const BanditInstance& instance, std::size_t a, std::uint64_t horizon, double c) {
  const double mu_star = instance.mu_star();
  const double mu = instance.means()[a];
  const double gap = instance.gap(a);
  const double f_t = exploration(ExplorationKind::Theorem1, static_cast<std::int64_t>(horizon));
  Theorem1Arm out;
  out.main = (1.0 + c) * f_t / kl_bernoulli(mu, mu_star);
  if (mu > 0.0 && mu < 1.0) {
    const double var_a = mu * (1.0 - mu);
    const double var_star = mu_star * (1.0 - mu_star);
    const double v = std::min(var_a * var_a, var_star * var_star);
    out.variance = (1.0 + c) * (1.0 + c) / (8.0 * c * c * gap * gap * v);
  }
  return out;
}

}  // namespace detail

/// Regret bound of the Bernoulli K-strategy run with the Theorem1 schedule,
/// for analysis constants c[a] > 0 (entries of optimal arms are ignored).
inline BoundReport theorem1_bound(const BanditInstance& instance, std::uint64_t horizon, const std::vector<double>& c) {
  detail::require_bernoulli(instance);
  detail::require_horizon(horizon);
  if (auto special = detail::theorem1_special_case(instance, horizon)) return *special;
  if (c.size() != instance.size()) throw Error(ErrorKind::ValidationError, "need one c per arm");

  BoundReport report;
  report.name = "theorem1";
  report.horizon = horizon;
  report.exploration = std::string(to_string(ExplorationKind::Theorem1));
  const double dev = theorem1_deviation_sum(instance.size(), horizon);
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    if (!(c[a] > 0.0)) throw Error(ErrorKind::ValidationError, "c must be positive");
    const auto terms = detail::theorem1_arm_terms(instance, a, horizon, c[a]);
    const double pulls = terms.main + dev + terms.variance + 3.0;
    report.arms.push_back({a, instance.gap(a), pulls, instance.gap(a) * pulls, c[a], 0.0});
    report.terms.push_back({a, "main", terms.main});
    report.terms.push_back({a, "deviation_sum", dev});
    report.terms.push_back({a, "variance", terms.variance});
    report.terms.push_back({a, "constant", 3.0});
  }
  detail::finish(report);
  return report;
}

inline BoundReport theorem1_bound(const BanditInstance& instance, std::uint64_t horizon, double c) {
  return theorem1_bound(instance, horizon, std::vector<double>(instance.size(), c));
}

/// Log-spaced grid of `points` values in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g;
  if (points == 1) return {lo};
  for (std::size_t i = 0; i < points; ++i) {
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1)));
  }
  return g;
}

inline std::vector<double> default_c_grid() { return log_grid(1e-2, 10.0, 20); }

/// theorem1_bound with each arm's c chosen from `c_grid` to minimize its own
/// contribution (the arms' terms are separable).
inline BoundReport theorem1_bound_best(const BanditInstance& instance, std::uint64_t horizon,
                                       const std::vector<double>& c_grid = default_c_grid()) {
  detail::require_bernoulli(instance);
  detail::require_horizon(horizon);
  if (auto special = detail::theorem1_special_case(instance, horizon)) return *special;
  if (c_grid.empty()) throw Error(ErrorKind::ValidationError, "empty c grid");
  std::vector<double> best_c(instance.size(), c_grid.front());
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    double best = kInf;
    for (double c : c_grid) {
      const auto terms = detail::theorem1_arm_terms(instance, a, horizon, c);
      if (terms.main + terms.variance < best) {
        best = terms.main + terms.variance;
        best_c[a] = c;
      }
    }
  }
  return theorem1_bound(instance, horizon, best_c);
}

// ---------------------------------------------------------------------------
// Finite-support K_inf-strategy bound.

namespace detail {

// KL(nu', nu_a) for weights on nu_a's support; zero candidate weights drop out.
inline double kl_on_support(std::span<const double> candidate, std::span<const double> reference) noexcept {
  double r = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (candidate[i] > 0.0) r += candidate[i] * std::log(candidate[i] / reference[i]);
  }
  return r > 0.0 ? r : 0.0;
}

}  // namespace detail

/// Grid approximation (from above) of
///   inf { K(nu', nu_a) : supp(nu') within supp(nu_a), K_inf(nu', mu*) < gamma }.
/// Returns 0 when nu_a itself is feasible and +inf when no grid point is.
/// The best grid point is polished by three rounds of finer local grids.
inline double theta_a(const FiniteDist& nu_a, double mu_star, double gamma, int grid) {
  if (nu_a.size() > 4) {
    throw Error(ErrorKind::SupportTooLarge, "theta_a handles at most 4 support points, got " + std::to_string(nu_a.size()));
  }
  if (!(gamma > 0.0)) throw Error(ErrorKind::ValueOutOfRange, "gamma must be positive");
  if (grid < 1) throw Error(ErrorKind::ValueOutOfRange, "grid must be positive");
  if (k_inf(nu_a, mu_star).value < gamma) return 0.0;

  const auto xs = nu_a.support();
  const auto ref = nu_a.weights();
  const std::size_t m = xs.size();
  if (m == 1) return kInf;  // the only candidate is nu_a itself

  std::vector<double> v(m);
  double best = kInf;
  std::vector<double> best_v;
  // Free coordinates v[0..m-2]; v[m-1] = 1 - sum.
  const auto consider = [&](std::span<const double> free) {
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (free[i] < 0.0) return;
      v[i] = free[i];
      rest -= free[i];
    }
    if (rest < -1e-15) return;
    v[m - 1] = std::max(rest, 0.0);
    const double obj = detail::kl_on_support(v, ref);
    if (obj >= best) return;
    if (k_inf(xs, v, mu_star).value < gamma) {
      best = obj;
      best_v.assign(v.begin(), v.end() - 1);
    }
  };

  const std::size_t dims = m - 1;
  std::vector<double> free(dims);
  // Walk all points of the simplex grid {i/grid} in `dims` free coordinates.
  const auto walk = [&](auto&& self, std::size_t d, int remaining, std::span<const double> origin, double step,
                        int lo_i, int hi_i) -> void {
    if (d == dims) {
      consider(free);
      return;
    }
    for (int i = lo_i; i <= hi_i && (remaining < 0 || i <= remaining); ++i) {
      free[d] = origin.empty() ? i * step : origin[d] + i * step;
      self(self, d + 1, remaining < 0 ? -1 : remaining - i, origin, step, lo_i, hi_i);
    }
  };
  walk(walk, 0, grid, {}, 1.0 / grid, 0, grid);

  double step = 1.0 / grid;
  for (int round = 0; round < 3 && !best_v.empty(); ++round) {
    const std::vector<double> origin = best_v;
    step /= 10.0;
    walk(walk, 0, -1, origin, step, -20, 20);
  }
  return best;
}

/// Upper end of the admissible epsilon interval of the K_inf-strategy bound.
inline double theorem2_epsilon_limit(const BanditInstance& instance, std::size_t a, double c) {
  const double mu_star = instance.mu_star();
  const double kinf = k_inf(instance.arm(a), mu_star).value;
  return std::min(instance.gap(a), (c / 2.0) / (1.0 + c) * (1.0 - mu_star) * kinf);
}

inline constexpr double kDefaultEpsilonFraction = 0.9;
inline constexpr int kDefaultThetaGrid = 200;

/// sum_{k=1}^{T} (k+1)^{|S*|} e^{-k eps^2}, summed exactly term by term.
inline double theorem2_types_sum(std::size_t support_size, double eps, std::uint64_t horizon) {
  double s = 0.0;
  const double e2 = eps * eps;
  for (std::uint64_t k = 1; k <= horizon; ++k) {
    const double kd = static_cast<double>(k);
    s += std::exp(static_cast<double>(support_size) * std::log(kd + 1.0) - kd * e2);
  }
  return s;
}

/// Expected-pull bound of one suboptimal arm under the K_inf-strategy with
/// f(t) = log t. Appends its terms to `report`.
inline ArmBound theorem2_arm(const BanditInstance& instance, std::size_t a, std::uint64_t horizon, double c, double eps,
                             int theta_grid, std::vector<BoundTerm>* terms = nullptr) {
  detail::require_horizon(horizon);
  const double mu_star = instance.mu_star();
  if (!(mu_star > 0.0 && mu_star < 1.0)) throw Error(ErrorKind::MuStarDegenerate, "mu* must lie in (0,1)");
  if (instance.is_optimal(a)) throw Error(ErrorKind::ValidationError, "arm " + std::to_string(a) + " is optimal");
  if (!(instance.means()[a] > 0.0)) throw Error(ErrorKind::MuADegenerate, "arm " + std::to_string(a) + " has mean 0");
  if (!(c > 0.0)) throw Error(ErrorKind::ValidationError, "c must be positive");
  const double limit = theorem2_epsilon_limit(instance, a, c);
  if (!(eps > 0.0 && eps < limit)) {
    throw Error(ErrorKind::EpsilonOutOfRange,
                "eps = " + std::to_string(eps) + " outside (0, " + std::to_string(limit) + ")");
  }

  const FiniteDist& nu_a = instance.arm(a);
  const std::size_t star_support = instance.arm(instance.optimal_arm()).size();
  const double gap = instance.gap(a);
  const double log_t = std::log(static_cast<double>(horizon));
  const double kinf = k_inf(nu_a, mu_star).value;
  const double main = (1.0 + c) * log_t / kinf;
  const double k0 = std::ceil(main);
  const double gamma = log_t / k0 + eps / (1.0 - mu_star);
  const double theta = theta_a(nu_a, mu_star, gamma, theta_grid);
  const double theta_term = 1.0 / (1.0 - std::exp(-theta));
  const double kmax = std::log(1.0 / (1.0 - mu_star + eps));
  const double types = kmax / (eps * eps) * theorem2_types_sum(star_support, eps, horizon);
  const double hoeffding = 1.0 / ((gap - eps) * (gap - eps));
  const double pulls = 1.0 + main + theta_term + types + hoeffding;
  if (terms) {
    terms->push_back({a, "constant", 1.0});
    terms->push_back({a, "main", main});
    terms->push_back({a, "theta", theta, true});
    terms->push_back({a, "theta_term", theta_term, true});
    terms->push_back({a, "types_sum", types});
    terms->push_back({a, "hoeffding", hoeffding});
  }
  return {a, gap, pulls, gap * pulls, c, eps};
}

/// Bound of the K_inf-strategy for per-arm c[a] and eps[a] (optimal arms' entries ignored).
inline BoundReport theorem2_bound(const BanditInstance& instance, std::uint64_t horizon, const std::vector<double>& c,
                                  const std::vector<double>& eps, int theta_grid = kDefaultThetaGrid) {
  if (c.size() != instance.size() || eps.size() != instance.size()) {
    throw Error(ErrorKind::ValidationError, "need one c and one eps per arm");
  }
  BoundReport report;
  report.name = "theorem2";
  report.horizon = horizon;
  report.exploration = std::string(to_string(ExplorationKind::LogT));
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    report.arms.push_back(theorem2_arm(instance, a, horizon, c[a], eps[a], theta_grid, &report.terms));
  }
  detail::finish(report);
  return report;
}

/// theorem2_bound with eps = fraction * limit and each arm's c minimized over `c_grid`.
inline BoundReport theorem2_bound_best(const BanditInstance& instance, std::uint64_t horizon,
                                       const std::vector<double>& c_grid = default_c_grid(),
                                       double eps_fraction = kDefaultEpsilonFraction, int theta_grid = kDefaultThetaGrid) {
  if (c_grid.empty()) throw Error(ErrorKind::ValidationError, "empty c grid");
  if (!(eps_fraction > 0.0 && eps_fraction < 1.0)) throw Error(ErrorKind::ValidationError, "eps fraction must lie in (0,1)");
  std::vector<double> c(instance.size(), c_grid.front());
  std::vector<double> eps(instance.size(), 0.0);
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    double best = kInf;
    for (double cc : c_grid) {
      const double e = eps_fraction * theorem2_epsilon_limit(instance, a, cc);
      const ArmBound ab = theorem2_arm(instance, a, horizon, cc, e, theta_grid);
      if (ab.pull_bound < best) {
        best = ab.pull_bound;
        c[a] = cc;
        eps[a] = e;
      }
    }
  }
  return theorem2_bound(instance, horizon, c, eps, theta_grid);
}

// ---------------------------------------------------------------------------
// Baselines.

struct BaselineBounds {
  BoundReport ucb1;
  BoundReport ucbv;
};

/// UCB1: (8/Delta^2) log T + 1 + pi^2/3 pulls. UCB-V: 10 (sigma^2/Delta^2 + 2/Delta) log T pulls.
inline BaselineBounds baseline_bounds(const BanditInstance& instance, std::uint64_t horizon) {
  detail::require_horizon(horizon);
  bool any_suboptimal = false;
  for (std::size_t a = 0; a < instance.size(); ++a) any_suboptimal |= !instance.is_optimal(a);
  if (!any_suboptimal) throw Error(ErrorKind::ZeroGap, "every arm is optimal; the baseline bounds need a positive gap");

  BaselineBounds out;
  out.ucb1.name = "ucb1";
  out.ucbv.name = "ucbv";
  out.ucb1.horizon = out.ucbv.horizon = horizon;
  const double log_t = std::log(static_cast<double>(horizon));
  for (std::size_t a = 0; a < instance.size(); ++a) {
    if (instance.is_optimal(a)) continue;
    const double gap = instance.gap(a);
    const double var = instance.arm(a).variance();
    const double ucb1 = 8.0 / (gap * gap) * log_t + 1.0 + std::numbers::pi * std::numbers::pi / 3.0;
    const double ucbv = 10.0 * (var / (gap * gap) + 2.0 / gap) * log_t;
    out.ucb1.arms.push_back({a, gap, ucb1, gap * ucb1, 0.0, 0.0});
    out.ucbv.arms.push_back({a, gap, ucbv, gap * ucbv, 0.0, 0.0});
    out.ucb1.terms.push_back({a, "main", 8.0 / (gap * gap) * log_t});
    out.ucb1.terms.push_back({a, "constant", 1.0 + std::numbers::pi * std::numbers::pi / 3.0});
    out.ucbv.terms.push_back({a, "variance", 10.0 * var / (gap * gap) * log_t});
    out.ucbv.terms.push_back({a, "range", 20.0 / gap * log_t});
  }
  detail::finish(out.ucb1);
  detail::finish(out.ucbv);
  return out;
}

}  // namespace klbandit
