#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "klbandit/dist.hpp"
#include "klbandit/error.hpp"
#include "klbandit/indices.hpp"

namespace klbandit {

enum class PolicyTag { KBernoulli, KInf, UCB1, UCBV };

struct PolicyKind {
  PolicyTag tag = PolicyTag::KBernoulli;
  ExplorationKind exploration = ExplorationKind::Theorem1;  // ignored by UCB1 / UCBV

  bool uses_exploration() const noexcept { return tag == PolicyTag::KBernoulli || tag == PolicyTag::KInf; }

  // Stable identifier used in CSV output, e.g. "k_inf:log_t" or "ucb1".
  std::string name() const {
    switch (tag) {
      case PolicyTag::KBernoulli: return "k_bernoulli:" + std::string(to_string(exploration));
      case PolicyTag::KInf: return "k_inf:" + std::string(to_string(exploration));
      case PolicyTag::UCB1: return "ucb1";
      case PolicyTag::UCBV: return "ucbv";
    }
    return "unknown";
  }

  friend bool operator==(const PolicyKind& a, const PolicyKind& b) {
    return a.tag == b.tag && (!a.uses_exploration() || a.exploration == b.exploration);
  }
};

inline std::string_view to_string(PolicyTag tag) {
  switch (tag) {
    case PolicyTag::KBernoulli: return "k_bernoulli";
    case PolicyTag::KInf: return "k_inf";
    case PolicyTag::UCB1: return "ucb1";
    case PolicyTag::UCBV: return "ucbv";
  }
  return "unknown";
}

struct ArmRecord {
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;
  double reward_sq_sum = 0.0;
  EmpiricalDist empirical;

  double mean() const noexcept { return pulls == 0 ? 0.0 : reward_sum / static_cast<double>(pulls); }

  // Plug-in (biased) variance.
  double variance() const noexcept {
    if (pulls == 0) return 0.0;
    const double m = mean();
    return std::max(0.0, reward_sq_sum / static_cast<double>(pulls) - m * m);
  }

  friend bool operator==(const ArmRecord&, const ArmRecord&) = default;
};

/// Per-replication bookkeeping for one decision strategy: N_t(a), reward
/// sums and empirical reward distributions, with t = sum of pulls.
class PolicyState {
 public:
  PolicyState(PolicyKind kind, std::size_t num_arms) : kind_(kind), arms_(num_arms) {
    if (num_arms < 2) throw Error(ErrorKind::NoArms, "a policy needs at least 2 arms, got " + std::to_string(num_arms));
  }

  const PolicyKind& kind() const noexcept { return kind_; }
  std::size_t num_arms() const noexcept { return arms_.size(); }
  const ArmRecord& arm(std::size_t a) const { return arms_.at(a); }
  std::uint64_t t() const noexcept { return t_; }

  void update(std::size_t a, double reward) {
    if (a >= arms_.size()) throw Error(ErrorKind::ValueOutOfRange, "arm " + std::to_string(a) + " out of range");
    if (!(reward >= 0.0 && reward <= 1.0)) {
      throw Error(ErrorKind::ValueOutOfRange, "reward " + std::to_string(reward) + " outside [0,1]");
    }
    ArmRecord& r = arms_[a];
    r.empirical.observe(reward);
    ++r.pulls;
    r.reward_sum += reward;
    r.reward_sq_sum += reward * reward;
    ++t_;
  }

  // Upper-confidence index of arm a at the current round (all arms pulled).
  double index(std::size_t a) const;

  friend bool operator==(const PolicyState&, const PolicyState&) = default;

 private:
  PolicyKind kind_;
  std::vector<ArmRecord> arms_;
  std::uint64_t t_ = 0;
};

inline double PolicyState::index(std::size_t a) const {
  const ArmRecord& r = arms_.at(a);
  const double n = static_cast<double>(r.pulls);
  const double log_t = std::log(static_cast<double>(t_));
  switch (kind_.tag) {
    case PolicyTag::KBernoulli:
      return b_plus_bernoulli(r.mean(), r.pulls, exploration(kind_.exploration, static_cast<std::int64_t>(t_)));
    case PolicyTag::KInf: {
      thread_local std::vector<double> support;
      thread_local std::vector<double> weights;
      r.empirical.fill(support, weights);
      return b_plus_kinf(support, weights, r.pulls, exploration(kind_.exploration, static_cast<std::int64_t>(t_)));
    }
    case PolicyTag::UCB1:
      return r.mean() + std::sqrt(2.0 * log_t / n);
    case PolicyTag::UCBV:
      // exploration zeta = 1, amplitude b = 1, c = 1
      return r.mean() + std::sqrt(2.0 * r.variance() * log_t / n) + 3.0 * log_t / n;
  }
  return 0.0;
}

/// Next arm to pull. Unpulled arms go first in index order; afterwards the
/// argmax of the index, ties broken by larger empirical mean and then by
/// smaller arm index.
inline std::size_t select_arm(const PolicyState& state) {
  const std::size_t k = state.num_arms();
  if (k == 0) throw Error(ErrorKind::NoArms, "no arms");
  for (std::size_t a = 0; a < k; ++a) {
    if (state.arm(a).pulls == 0) return a;
  }

  std::size_t best = 0;
  double best_index = -kInf;
  double best_mean = -kInf;
  const auto consider = [&](std::size_t a, double idx) {
    const double m = state.arm(a).mean();
    const bool better = idx > best_index || (idx == best_index && (m > best_mean || (m == best_mean && a < best)));
    if (better) {
      best = a;
      best_index = idx;
      best_mean = m;
    }
  };

  if (!state.kind().uses_exploration()) {
    for (std::size_t a = 0; a < k; ++a) consider(a, state.index(a));
    return best;
  }

  // The KL indices are expensive; visit arms by decreasing Pinsker cap and
  // skip any arm whose cap is already strictly below the best index found.
  // The solvers never return above the cap, so the result is unchanged.
  const double threshold = exploration(state.kind().exploration, static_cast<std::int64_t>(state.t()));
  thread_local std::vector<std::pair<double, std::size_t>> order;
  order.clear();
  for (std::size_t a = 0; a < k; ++a) {
    const ArmRecord& r = state.arm(a);
    const double cap = detail::pinsker_cap(r.mean(), r.pulls, threshold);
    order.emplace_back(cap >= detail::kIndexRightEnd ? 1.0 : cap, a);
  }
  std::sort(order.begin(), order.end(),
            [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
  for (const auto& [cap, a] : order) {
    // Margin covers the rounding gap between the two mean computations.
    if (cap + 1e-12 < best_index) break;
    consider(a, state.index(a));
  }
  return best;
}

inline PolicyState update(PolicyState state, std::size_t arm, double reward) {
  state.update(arm, reward);
  return state;
}

}  // namespace klbandit
