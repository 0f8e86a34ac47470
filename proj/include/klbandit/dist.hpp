#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "klbandit/error.hpp"

namespace klbandit {

// Deterministic pseudo-random stream. The engine is std::mt19937_64, whose
// output sequence is fixed by the standard; doubles are built from the top
// 53 bits so no implementation-defined distribution object is involved.
class RandomSource {
 public:
  static constexpr std::uint64_t kSeedMix = 0x9E3779B97F4A7C15ULL;

  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // child_seed = base XOR (index * 0x9E3779B97F4A7C15), wrapping.
  static std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return base ^ (index * kSeedMix);
  }

  RandomSource child(std::uint64_t index) const { return RandomSource(child_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Probability distribution with finite support in [0,1], held in canonical
/// form: strictly increasing support, strictly positive weights summing to 1.
class FiniteDist {
 public:
  static constexpr double kNormalizationTolerance = 1e-9;

  /// Builds the canonical form: sorts, merges duplicate points, drops zero
  /// weights and renormalizes. Throws EmptySupport, ValueOutOfRange or
  /// WeightsNotNormalizable.
  static FiniteDist make(std::span<const double> support, std::span<const double> weights) {
    if (support.empty()) throw Error(ErrorKind::EmptySupport, "support is empty");
    if (support.size() != weights.size()) {
      throw Error(ErrorKind::ValueOutOfRange, "support and weights differ in length (" +
                                               std::to_string(support.size()) + " vs " +
                                               std::to_string(weights.size()) + ")");
    }
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(support.size());
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double s = support[i];
      const double w = weights[i];
      if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorKind::ValueOutOfRange, "support point " + std::to_string(s) + " outside [0,1]");
      }
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorKind::ValueOutOfRange, "weight " + std::to_string(w) + " is negative or not finite");
      }
      total += w;
      if (w > 0.0) atoms.emplace_back(s, w);
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw Error(ErrorKind::WeightsNotNormalizable, "weights sum to " + std::to_string(total));
    }
    std::sort(atoms.begin(), atoms.end());
    FiniteDist d;
    for (const auto& [s, w] : atoms) {
      if (!d.support_.empty() && d.support_.back() == s) {
        d.weights_.back() += w;
      } else {
        d.support_.push_back(s);
        d.weights_.push_back(w);
      }
    }
    d.normalize();
    return d;
  }

  static FiniteDist make(std::initializer_list<double> support, std::initializer_list<double> weights) {
    return make(std::span<const double>(support.begin(), support.size()),
                std::span<const double>(weights.begin(), weights.size()));
  }

  static FiniteDist bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::ValueOutOfRange, "Bernoulli parameter " + std::to_string(p));
    return make({0.0, 1.0}, {1.0 - p, p});
  }

  static FiniteDist dirac(double x) { return make({x}, {1.0}); }

  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return support_.size(); }

  double mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) m += support_[i] * weights_[i];
    return std::clamp(m, 0.0, 1.0);
  }

  double variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) v += weights_[i] * (support_[i] - m) * (support_[i] - m);
    return v;
  }

  // Weight of an exact support point, 0 when absent.
  double weight_of(double x) const noexcept {
    const auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.end() || *it != x) return 0.0;
    return weights_[static_cast<std::size_t>(it - support_.begin())];
  }

  bool is_bernoulli() const noexcept {
    return std::all_of(support_.begin(), support_.end(), [](double s) { return s == 0.0 || s == 1.0; });
  }

  // Index of the atom selected by a uniform variate in [0,1).
  std::size_t index_for(double u) const noexcept {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return support_.size() - 1;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

  std::size_t sample_index(RandomSource& rng) const { return index_for(rng.uniform()); }

  double sample(RandomSource& rng) const { return support_[sample_index(rng)]; }

  friend bool operator==(const FiniteDist& a, const FiniteDist& b) {
    return a.support_ == b.support_ && a.weights_ == b.weights_;
  }

 private:
  FiniteDist() = default;

  void normalize() {
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    for (double& w : weights_) w /= total;
    // Pin the largest atom so the stored weights sum to exactly 1 in index order.
    const auto largest = static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
    double rest = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (i != largest) rest += weights_[i];
    }
    weights_[largest] = 1.0 - rest;
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  std::vector<double> support_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

inline FiniteDist make_finite(std::span<const double> support, std::span<const double> weights) {
  return FiniteDist::make(support, weights);
}

inline double mean(const FiniteDist& d) noexcept { return d.mean(); }

inline double sample(const FiniteDist& d, RandomSource& rng) { return d.sample(rng); }

/// Multiset of observed rewards, keyed by exact value.
class EmpiricalDist {
 public:
  const std::map<double, std::uint64_t>& atoms() const noexcept { return atoms_; }
  std::uint64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

  std::uint64_t count(double x) const noexcept {
    const auto it = atoms_.find(x);
    return it == atoms_.end() ? 0 : it->second;
  }

  void observe(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::ValueOutOfRange, "reward " + std::to_string(x) + " outside [0,1]");
    ++atoms_[x];
    ++total_;
  }

  FiniteDist freeze() const {
    if (total_ == 0) throw Error(ErrorKind::EmptyEmpirical, "no observations to freeze");
    std::vector<double> support;
    std::vector<double> weights;
    fill(support, weights);
    return FiniteDist::make(support, weights);
  }

  // Writes support and count/total weights into caller-owned buffers; used on
  // hot paths that cannot afford a FiniteDist per call.
  void fill(std::vector<double>& support, std::vector<double>& weights) const {
    support.clear();
    weights.clear();
    const double n = static_cast<double>(total_);
    for (const auto& [x, c] : atoms_) {
      support.push_back(x);
      weights.push_back(static_cast<double>(c) / n);
    }
  }

  friend bool operator==(const EmpiricalDist&, const EmpiricalDist&) = default;

 private:
  std::map<double, std::uint64_t> atoms_;
  std::uint64_t total_ = 0;
};

inline EmpiricalDist observe(EmpiricalDist e, double x) {
  e.observe(x);
  return e;
}

inline FiniteDist freeze(const EmpiricalDist& e) { return e.freeze(); }

}  // namespace klbandit
