#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "klbandit/dist.hpp"
#include "klbandit/divergence.hpp"
#include "klbandit/error.hpp"
#include "klbandit/policies.hpp"

namespace klbandit {

/// Arm distributions with their means, gaps and optimal mean.
class BanditInstance {
 public:
  explicit BanditInstance(std::vector<FiniteDist> arms) : arms_(std::move(arms)) {
    if (arms_.size() < 2) throw Error(ErrorKind::NoArms, "an instance needs at least 2 arms");
    for (const auto& d : arms_) means_.push_back(d.mean());
    mu_star_ = *std::max_element(means_.begin(), means_.end());
    for (double m : means_) gaps_.push_back(mu_star_ - m);
  }

  std::size_t size() const noexcept { return arms_.size(); }
  const FiniteDist& arm(std::size_t a) const { return arms_.at(a); }
  const std::vector<FiniteDist>& arms() const noexcept { return arms_; }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& gaps() const noexcept { return gaps_; }
  double mu_star() const noexcept { return mu_star_; }
  double gap(std::size_t a) const { return gaps_.at(a); }
  bool is_optimal(std::size_t a) const { return gaps_.at(a) == 0.0; }

  // Lowest-indexed optimal arm.
  std::size_t optimal_arm() const noexcept {
    return static_cast<std::size_t>(std::find(gaps_.begin(), gaps_.end(), 0.0) - gaps_.begin());
  }

 private:
  std::vector<FiniteDist> arms_;
  std::vector<double> means_;
  std::vector<double> gaps_;
  double mu_star_ = 0.0;
};

/// About `count` log-spaced rounds in [1, horizon], always including horizon.
inline std::vector<std::uint64_t> log_checkpoints(std::uint64_t horizon, std::size_t count = 50) {
  std::vector<std::uint64_t> out;
  if (horizon == 0) return out;
  if (count < 2) return {horizon};
  const double lh = std::log(static_cast<double>(horizon));
  for (std::size_t k = 0; k < count; ++k) {
    const double x = std::exp(lh * static_cast<double>(k) / static_cast<double>(count - 1));
    auto t = static_cast<std::uint64_t>(std::llround(x));
    t = std::clamp<std::uint64_t>(t, 1, horizon);
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  if (out.back() != horizon) out.push_back(horizon);
  return out;
}

struct RunResult {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> regret_curve;               // pseudo-regret at each checkpoint
  std::vector<std::vector<std::uint64_t>> pull_curve;  // [checkpoint][arm]
  std::vector<std::uint64_t> pulls;               // N_T(a)
  std::uint64_t action_log_hash = 0;
};

struct AggregateResult {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> mean_regret;
  std::vector<double> stderr_regret;
  std::vector<std::vector<double>> mean_pull_curve;    // [checkpoint][arm]
  std::vector<std::vector<double>> stderr_pull_curve;  // [checkpoint][arm]
  std::vector<double> mean_pulls;
  std::vector<double> stderr_pulls;
  std::uint64_t replications = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> action_log_hashes;  // per replication, index order
};

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// FNV-1a over the 4 little-endian bytes of the arm index.
inline std::uint64_t fnv1a_action(std::uint64_t h, std::uint32_t arm) noexcept {
  for (int b = 0; b < 4; ++b) {
    h ^= (arm >> (8 * b)) & 0xFFu;
    h *= kFnvPrime;
  }
  return h;
}

inline void validate_checkpoints(const std::vector<std::uint64_t>& cps, std::uint64_t horizon) {
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] < 1 || cps[i] > horizon || (i > 0 && cps[i] <= cps[i - 1])) {
      throw Error(ErrorKind::ValidationError, "checkpoints must be strictly increasing within [1, T]");
    }
  }
}

}  // namespace detail

/// One replication: initialization then index play for `horizon` rounds.
/// Deterministic in (instance, kind, horizon, seed, checkpoints).
inline RunResult run_one(const BanditInstance& instance, const PolicyKind& kind, std::uint64_t horizon,
                         std::uint64_t seed, std::vector<std::uint64_t> checkpoints = {}) {
  const std::size_t k = instance.size();
  if (horizon < k) {
    throw Error(ErrorKind::HorizonTooSmall,
                "horizon " + std::to_string(horizon) + " is smaller than the number of arms " + std::to_string(k));
  }
  if (checkpoints.empty()) checkpoints = log_checkpoints(horizon);
  detail::validate_checkpoints(checkpoints, horizon);

  RunResult out;
  out.checkpoints = checkpoints;
  out.regret_curve.reserve(checkpoints.size());
  out.pull_curve.reserve(checkpoints.size());

  RandomSource rng(seed);
  PolicyState state(kind, k);
  std::uint64_t hash = detail::kFnvOffset;
  std::size_t next_cp = 0;
  std::vector<std::uint64_t> pulls(k, 0);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const std::size_t a = select_arm(state);
    const double reward = instance.arm(a).sample(rng);
    state.update(a, reward);
    ++pulls[a];
    hash = detail::fnv1a_action(hash, static_cast<std::uint32_t>(a));
    if (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
      double regret = 0.0;
      for (std::size_t b = 0; b < k; ++b) regret += instance.gap(b) * static_cast<double>(pulls[b]);
      out.regret_curve.push_back(regret);
      out.pull_curve.push_back(pulls);
      ++next_cp;
    }
  }
  out.pulls = std::move(pulls);
  out.action_log_hash = hash;
  return out;
}

namespace detail {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Two-pass mean and standard error of the mean, summed in index order.
template <class Get>
MeanStderr mean_stderr(std::size_t n, Get&& get) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += get(i);
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = get(i) - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

}  // namespace detail

/// Resolves a worker count: 0 means one per hardware thread.
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// R independent replications with child seeds base ^ (r * 0x9E3779B97F4A7C15),
/// reduced in replication order so the result does not depend on `workers`.
inline AggregateResult run_many(const BanditInstance& instance, const PolicyKind& kind, std::uint64_t horizon,
                                std::uint64_t replications, std::uint64_t base_seed,
                                std::vector<std::uint64_t> checkpoints = {}, unsigned workers = 0) {
  if (replications < 1) throw Error(ErrorKind::ValidationError, "replications must be >= 1");
  if (horizon < instance.size()) {
    throw Error(ErrorKind::HorizonTooSmall,
                "horizon " + std::to_string(horizon) + " is smaller than the number of arms " + std::to_string(instance.size()));
  }
  if (checkpoints.empty()) checkpoints = log_checkpoints(horizon);
  detail::validate_checkpoints(checkpoints, horizon);

  std::vector<RunResult> runs(replications);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (std::uint64_t r = next++; r < replications; r = next++) {
      try {
        runs[r] = run_one(instance, kind, horizon, RandomSource::child_seed(base_seed, r), checkpoints);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n_workers = std::min<std::uint64_t>(resolve_workers(workers), replications);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t k = instance.size();
  const std::size_t n_cp = checkpoints.size();
  const auto n = static_cast<std::size_t>(replications);
  AggregateResult agg;
  agg.checkpoints = checkpoints;
  agg.replications = replications;
  agg.base_seed = base_seed;
  agg.mean_pull_curve.assign(n_cp, std::vector<double>(k));
  agg.stderr_pull_curve.assign(n_cp, std::vector<double>(k));
  for (std::size_t c = 0; c < n_cp; ++c) {
    const auto ms = detail::mean_stderr(n, [&](std::size_t r) { return runs[r].regret_curve[c]; });
    agg.mean_regret.push_back(ms.mean);
    agg.stderr_regret.push_back(ms.stderr_);
    for (std::size_t a = 0; a < k; ++a) {
      const auto mp = detail::mean_stderr(n, [&](std::size_t r) { return static_cast<double>(runs[r].pull_curve[c][a]); });
      agg.mean_pull_curve[c][a] = mp.mean;
      agg.stderr_pull_curve[c][a] = mp.stderr_;
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    const auto mp = detail::mean_stderr(n, [&](std::size_t r) { return static_cast<double>(runs[r].pulls[a]); });
    agg.mean_pulls.push_back(mp.mean);
    agg.stderr_pulls.push_back(mp.stderr_);
  }
  for (const auto& run : runs) agg.action_log_hashes.push_back(run.action_log_hash);
  return agg;
}

// ---------------------------------------------------------------------------
// Monte Carlo certificates for the concentration inequalities.

struct McCheck {
  double empirical_frequency = 0.0;
  double bound = 0.0;
  std::uint64_t events = 0;
  std::uint64_t reps = 0;

  // Frequency within three binomial standard errors of the bound.
  double allowance() const { return bound + 3.0 * std::sqrt(bound / static_cast<double>(reps)); }
  bool passes() const { return empirical_frequency <= allowance(); }
  bool vacuous() const { return bound >= 1.0; }
};

inline constexpr std::uint64_t kDefaultCertificateSeed = 0x5EEDC0FFEEULL;

/// Frequency of {exists s <= t : s * K(beta(p_hat_s), beta(p)) >= eps} over
/// `reps` Bernoulli(p) streams, against the bound 2e ceil(eps log t) e^{-eps}.
inline McCheck mc_check_deviation(double p, std::uint64_t t, double eps, std::uint64_t reps,
                                  std::uint64_t seed = kDefaultCertificateSeed) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::ValueOutOfRange, "p must lie in (0,1)");
  if (!(eps > 1.0)) throw Error(ErrorKind::ValueOutOfRange, "eps must exceed 1");
  if (t < 1 || reps < 1) throw Error(ErrorKind::ValueOutOfRange, "t and reps must be positive");

  McCheck out;
  out.reps = reps;
  out.bound = 2.0 * std::exp(1.0) * std::ceil(eps * std::log(static_cast<double>(t))) * std::exp(-eps);

  // For each s, the event is {successes <= low[s]} or {successes >= high[s]},
  // since k -> s K(beta(k/s), beta(p)) is convex with its minimum at k = s p.
  std::vector<std::int64_t> low(t + 1, -1);
  std::vector<std::int64_t> high(t + 1, 0);
  for (std::uint64_t s = 1; s <= t; ++s) {
    const double sd = static_cast<double>(s);
    std::int64_t lo = -1;
    for (std::int64_t k = 0; static_cast<double>(k) <= sd * p; ++k) {
      if (sd * kl_bernoulli(static_cast<double>(k) / sd, p) >= eps) lo = k;
      else break;
    }
    auto hi = static_cast<std::int64_t>(s) + 1;
    for (auto k = static_cast<std::int64_t>(s); static_cast<double>(k) >= sd * p; --k) {
      if (sd * kl_bernoulli(static_cast<double>(k) / sd, p) >= eps) hi = k;
      else break;
    }
    low[s] = lo;
    high[s] = hi;
  }

  RandomSource rng(seed);
  for (std::uint64_t r = 0; r < reps; ++r) {
    std::int64_t successes = 0;
    for (std::uint64_t s = 1; s <= t; ++s) {
      if (rng.uniform() < p) ++successes;
      if (successes <= low[s] || successes >= high[s]) {
        ++out.events;
        break;
      }
    }
  }
  out.empirical_frequency = static_cast<double>(out.events) / static_cast<double>(reps);
  return out;
}

/// Frequency of {K(nu_hat_k, nu) > gamma} over `reps` samples of size k,
/// against the method-of-types bound (k+1)^|S| e^{-k gamma}.
inline McCheck mc_check_types(const FiniteDist& nu, std::uint64_t k, double gamma, std::uint64_t reps,
                              std::uint64_t seed = kDefaultCertificateSeed) {
  if (k < 1 || reps < 1) throw Error(ErrorKind::ValueOutOfRange, "k and reps must be positive");
  if (!(gamma > 0.0)) throw Error(ErrorKind::ValueOutOfRange, "gamma must be positive");

  McCheck out;
  out.reps = reps;
  const double kd = static_cast<double>(k);
  out.bound = std::exp(static_cast<double>(nu.size()) * std::log(kd + 1.0) - kd * gamma);

  const auto w = nu.weights();
  std::vector<std::uint64_t> counts(nu.size());
  RandomSource rng(seed);
  for (std::uint64_t r = 0; r < reps; ++r) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::uint64_t j = 0; j < k; ++j) ++counts[nu.sample_index(rng)];
    // K(nu_hat, nu) over the atoms nu_hat charges; nu_hat << nu always.
    double kl = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      const double q = static_cast<double>(counts[i]) / kd;
      kl += q * std::log(q / w[i]);
    }
    if (kl > gamma) ++out.events;
  }
  out.empirical_frequency = static_cast<double>(out.events) / static_cast<double>(reps);
  return out;
}

}  // namespace klbandit
