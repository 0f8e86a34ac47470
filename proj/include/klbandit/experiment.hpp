#pragma once

// Experiment configuration (JSON), orchestration and CSV/manifest output.
// Needs nlohmann/json on the include path as "json.hpp".

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "klbandit/bounds.hpp"
#include "klbandit/dist.hpp"
#include "klbandit/error.hpp"
#include "klbandit/policies.hpp"
#include "klbandit/sim.hpp"

namespace klbandit {

struct BoundSettings {
  double c_min = 1e-2;
  double c_max = 10.0;
  std::size_t c_points = 20;
  double epsilon_fraction = kDefaultEpsilonFraction;
  int theta_grid = kDefaultThetaGrid;

  std::vector<double> c_grid() const { return log_grid(c_min, c_max, c_points); }
};

struct ExperimentConfig {
  std::vector<FiniteDist> arms;
  std::vector<PolicyKind> policies;
  std::uint64_t horizon = 0;
  std::uint64_t replications = 100;
  std::uint64_t seed = 0;
  // Either a log-spaced count or an explicit list.
  std::variant<std::size_t, std::vector<std::uint64_t>> checkpoints = std::size_t{50};
  std::string out = "bandit";
  BoundSettings bounds;

  BanditInstance instance() const { return BanditInstance(arms); }

  std::vector<std::uint64_t> checkpoint_list() const {
    if (const auto* n = std::get_if<std::size_t>(&checkpoints)) return log_checkpoints(horizon, *n);
    return std::get<std::vector<std::uint64_t>>(checkpoints);
  }
};

/// Round-trippable decimal form of a double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_hex(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, x);
  return buf;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok |= key == a;
    if (!ok) throw Error(ErrorKind::ValidationError, where + ": unknown field \"" + key + "\"");
  }
}

inline double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorKind::ValidationError, where + " must be a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw Error(ErrorKind::ValidationError, where + " must be a non-negative integer");
}

inline std::vector<double> get_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorKind::ValidationError, where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline FiniteDist parse_arm(const json& v, std::size_t index) {
  const std::string where = "arms[" + std::to_string(index) + "]";
  if (!v.is_object()) throw Error(ErrorKind::ValidationError, where + " must be an object");
  try {
    if (v.contains("bernoulli")) {
      reject_unknown(v, {"bernoulli"}, where);
      return FiniteDist::bernoulli(get_number(v["bernoulli"], where + ".bernoulli"));
    }
    reject_unknown(v, {"support", "weights"}, where);
    if (!v.contains("support") || !v.contains("weights")) {
      throw Error(ErrorKind::ValidationError, where + " needs either \"bernoulli\" or both \"support\" and \"weights\"");
    }
    const auto s = get_numbers(v["support"], where + ".support");
    const auto w = get_numbers(v["weights"], where + ".weights");
    return FiniteDist::make(s, w);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError) throw;
    throw Error(ErrorKind::ValidationError, where + ": " + e.what());
  }
}

inline constexpr std::string_view kValidPolicies = "k_bernoulli, k_inf, ucb1, ucbv";

inline PolicyKind parse_policy_name(std::string_view name, const std::string& where) {
  auto colon = name.find(':');
  const std::string_view tag = name.substr(0, colon);
  PolicyKind kind;
  if (tag == "k_bernoulli") {
    kind = {PolicyTag::KBernoulli, ExplorationKind::Theorem1};
  } else if (tag == "k_inf") {
    kind = {PolicyTag::KInf, ExplorationKind::LogT};
  } else if (tag == "ucb1") {
    kind = {PolicyTag::UCB1, ExplorationKind::LogT};
  } else if (tag == "ucbv") {
    kind = {PolicyTag::UCBV, ExplorationKind::LogT};
  } else {
    throw Error(ErrorKind::ValidationError,
                where + ": unknown policy \"" + std::string(tag) + "\" (valid: " + std::string(kValidPolicies) + ")");
  }
  if (colon != std::string_view::npos) {
    const auto expl = name.substr(colon + 1);
    if (!kind.uses_exploration()) {
      throw Error(ErrorKind::ValidationError, where + ": policy " + std::string(tag) + " takes no exploration function");
    }
    if (expl == "log_t") {
      kind.exploration = ExplorationKind::LogT;
    } else if (expl == "theorem1") {
      kind.exploration = ExplorationKind::Theorem1;
    } else {
      throw Error(ErrorKind::ValidationError,
                  where + ": unknown exploration \"" + std::string(expl) + "\" (valid: log_t, theorem1)");
    }
  }
  return kind;
}

inline PolicyKind parse_policy(const json& v, std::size_t index) {
  const std::string where = "policies[" + std::to_string(index) + "]";
  if (v.is_string()) return parse_policy_name(v.get<std::string>(), where);
  if (!v.is_object()) throw Error(ErrorKind::ValidationError, where + " must be a string or an object");
  reject_unknown(v, {"name", "exploration"}, where);
  if (!v.contains("name") || !v["name"].is_string()) throw Error(ErrorKind::ValidationError, where + ".name must be a string");
  std::string name = v["name"].get<std::string>();
  if (v.contains("exploration")) {
    if (!v["exploration"].is_string()) throw Error(ErrorKind::ValidationError, where + ".exploration must be a string");
    name += ":" + v["exploration"].get<std::string>();
  }
  return parse_policy_name(name, where);
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

}  // namespace detail

/// Parses and validates a JSON experiment description.
inline ExperimentConfig parse_config_text(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::ParseError, "line 1: top level must be a JSON object");
  detail::reject_unknown(root, {"arms", "policies", "T", "replications", "seed", "checkpoints", "out", "bounds"}, "config");

  ExperimentConfig cfg;
  if (!root.contains("arms") || !root["arms"].is_array()) throw Error(ErrorKind::ValidationError, "arms must be an array");
  for (std::size_t i = 0; i < root["arms"].size(); ++i) cfg.arms.push_back(detail::parse_arm(root["arms"][i], i));
  if (cfg.arms.size() < 2) throw Error(ErrorKind::ValidationError, "need at least 2 arms, got " + std::to_string(cfg.arms.size()));

  if (!root.contains("policies") || !root["policies"].is_array() || root["policies"].empty()) {
    throw Error(ErrorKind::ValidationError, "policies must be a non-empty array");
  }
  for (std::size_t i = 0; i < root["policies"].size(); ++i) {
    const PolicyKind kind = detail::parse_policy(root["policies"][i], i);
    for (const auto& p : cfg.policies) {
      if (p == kind) throw Error(ErrorKind::ValidationError, "policies[" + std::to_string(i) + "]: duplicate policy " + kind.name());
    }
    cfg.policies.push_back(kind);
  }

  if (!root.contains("T")) throw Error(ErrorKind::ValidationError, "T is required");
  cfg.horizon = detail::get_count(root["T"], "T");
  if (root.contains("replications")) cfg.replications = detail::get_count(root["replications"], "replications");
  if (root.contains("seed")) cfg.seed = detail::get_count(root["seed"], "seed");
  if (root.contains("out")) {
    if (!root["out"].is_string()) throw Error(ErrorKind::ValidationError, "out must be a string");
    cfg.out = root["out"].get<std::string>();
  }

  if (root.contains("checkpoints")) {
    const auto& c = root["checkpoints"];
    if (c.is_string()) {
      const auto s = c.get<std::string>();
      std::size_t n = 0;
      std::size_t used = 0;
      if (s.rfind("log", 0) == 0 && s.size() > 3) {
        try {
          n = std::stoul(s.substr(3), &used);
        } catch (const std::exception&) {
          used = 0;
        }
      }
      if (used == 0 || used != s.size() - 3 || n < 1) {
        throw Error(ErrorKind::ValidationError, "checkpoints: expected \"logN\" or an array, got \"" + s + "\"");
      }
      cfg.checkpoints = n;
    } else if (c.is_array()) {
      std::vector<std::uint64_t> list;
      for (std::size_t i = 0; i < c.size(); ++i) list.push_back(detail::get_count(c[i], "checkpoints[" + std::to_string(i) + "]"));
      cfg.checkpoints = list;
    } else {
      throw Error(ErrorKind::ValidationError, "checkpoints must be a string or an array");
    }
  }

  if (root.contains("bounds")) {
    const auto& b = root["bounds"];
    if (!b.is_object()) throw Error(ErrorKind::ValidationError, "bounds must be an object");
    detail::reject_unknown(b, {"c_grid", "epsilon_fraction", "theta_grid"}, "bounds");
    if (b.contains("c_grid")) {
      const auto& g = b["c_grid"];
      if (!g.is_object()) throw Error(ErrorKind::ValidationError, "bounds.c_grid must be an object");
      detail::reject_unknown(g, {"min", "max", "points"}, "bounds.c_grid");
      if (g.contains("min")) cfg.bounds.c_min = detail::get_number(g["min"], "bounds.c_grid.min");
      if (g.contains("max")) cfg.bounds.c_max = detail::get_number(g["max"], "bounds.c_grid.max");
      if (g.contains("points")) cfg.bounds.c_points = detail::get_count(g["points"], "bounds.c_grid.points");
    }
    if (b.contains("epsilon_fraction")) {
      cfg.bounds.epsilon_fraction = detail::get_number(b["epsilon_fraction"], "bounds.epsilon_fraction");
    }
    if (b.contains("theta_grid")) {
      cfg.bounds.theta_grid = static_cast<int>(detail::get_count(b["theta_grid"], "bounds.theta_grid"));
    }
  }
  return cfg;
}

/// Checks the cross-field invariants; called after command-line overrides.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.horizon < cfg.arms.size()) {
    throw Error(ErrorKind::ValidationError,
                "T = " + std::to_string(cfg.horizon) + " is smaller than the number of arms (" + std::to_string(cfg.arms.size()) + ")");
  }
  if (cfg.replications < 1) throw Error(ErrorKind::ValidationError, "replications must be >= 1");
  if (cfg.out.empty()) throw Error(ErrorKind::ValidationError, "out must not be empty");
  if (const auto* list = std::get_if<std::vector<std::uint64_t>>(&cfg.checkpoints)) {
    if (list->empty()) throw Error(ErrorKind::ValidationError, "checkpoints must not be empty");
    detail::validate_checkpoints(*list, cfg.horizon);
  }
  const auto& b = cfg.bounds;
  if (!(b.c_min > 0.0 && b.c_max >= b.c_min) || b.c_points < 1) {
    throw Error(ErrorKind::ValidationError, "bounds.c_grid needs 0 < min <= max and points >= 1");
  }
  if (!(b.epsilon_fraction > 0.0 && b.epsilon_fraction < 1.0)) {
    throw Error(ErrorKind::ValidationError, "bounds.epsilon_fraction must lie in (0,1)");
  }
  if (b.theta_grid < 1) throw Error(ErrorKind::ValidationError, "bounds.theta_grid must be >= 1");
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig cfg = parse_config_text(text);
  validate(cfg);
  return cfg;
}

/// Echo of a config in the JSON input format, with defaults filled.
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json j;
  j["arms"] = json::array();
  for (const auto& arm : cfg.arms) {
    if (arm.is_bernoulli()) {
      j["arms"].push_back({{"bernoulli", arm.mean()}});
    } else {
      j["arms"].push_back({{"support", std::vector<double>(arm.support().begin(), arm.support().end())},
                           {"weights", std::vector<double>(arm.weights().begin(), arm.weights().end())}});
    }
  }
  j["policies"] = json::array();
  for (const auto& p : cfg.policies) j["policies"].push_back(p.name());
  j["T"] = cfg.horizon;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  if (const auto* n = std::get_if<std::size_t>(&cfg.checkpoints)) {
    j["checkpoints"] = "log" + std::to_string(*n);
  } else {
    j["checkpoints"] = std::get<std::vector<std::uint64_t>>(cfg.checkpoints);
  }
  j["out"] = cfg.out;
  j["bounds"] = {{"c_grid", {{"min", cfg.bounds.c_min}, {"max", cfg.bounds.c_max}, {"points", cfg.bounds.c_points}}},
                 {"epsilon_fraction", cfg.bounds.epsilon_fraction},
                 {"theta_grid", cfg.bounds.theta_grid}};
  return j;
}

// ---------------------------------------------------------------------------
// Bound table.

struct BoundRow {
  std::string bound_name;
  std::string arm;  // arm index, or "all"
  std::string term;
  std::string value;
};

namespace detail {

inline std::string skipped(const Error& e) { return "skipped:" + std::string(to_string(e.kind())); }

inline void append_report(std::vector<BoundRow>& rows, const BoundReport& r) {
  for (const auto& ab : r.arms) {
    const std::string arm = std::to_string(ab.arm);
    for (const auto& t : r.terms) {
      if (t.arm == ab.arm) rows.push_back({r.name, arm, t.approximate ? t.term + "_approx" : t.term, format_double(t.value)});
    }
    if (ab.c > 0.0) rows.push_back({r.name, arm, "c", format_double(ab.c)});
    if (ab.epsilon > 0.0) rows.push_back({r.name, arm, "epsilon", format_double(ab.epsilon)});
    rows.push_back({r.name, arm, "pull_bound", format_double(ab.pull_bound)});
    rows.push_back({r.name, arm, "contribution", format_double(ab.contribution)});
  }
  if (!r.special_case.empty()) rows.push_back({r.name, "all", "special_case:" + r.special_case, format_double(r.total)});
  rows.push_back({r.name, "all", "total", format_double(r.total)});
}

}  // namespace detail

/// Every bound whose preconditions hold, as bound_name,arm,term,value rows;
/// failed preconditions become "skipped:<reason>" rows.
inline std::vector<BoundRow> bound_rows(const ExperimentConfig& cfg) {
  const BanditInstance instance = cfg.instance();
  const std::uint64_t T = cfg.horizon;
  const auto c_grid = cfg.bounds.c_grid();
  std::vector<BoundRow> rows;

  try {
    detail::append_report(rows, lower_bound_report(instance));
  } catch (const Error& e) {
    rows.push_back({"lower_bound_slope", "all", "total", detail::skipped(e)});
  }

  try {
    detail::append_report(rows, theorem1_bound_best(instance, T, c_grid));
  } catch (const Error& e) {
    rows.push_back({"theorem1", "all", "total", detail::skipped(e)});
  }

  // theorem2 arm by arm, so one degenerate arm only skips its own rows.
  {
    BoundReport report;
    report.name = "theorem2";
    report.horizon = T;
    std::optional<Error> failure;
    if (!(instance.mu_star() > 0.0 && instance.mu_star() < 1.0)) {
      failure = Error(ErrorKind::MuStarDegenerate, "mu* must lie in (0,1)");
    }
    std::vector<std::pair<std::size_t, Error>> arm_failures;
    if (!failure) {
      for (std::size_t a = 0; a < instance.size(); ++a) {
        if (instance.is_optimal(a)) continue;
        try {
          double best = kInf;
          ArmBound best_arm;
          std::vector<BoundTerm> best_terms;
          for (double c : c_grid) {
            const double eps = cfg.bounds.epsilon_fraction * theorem2_epsilon_limit(instance, a, c);
            std::vector<BoundTerm> terms;
            const ArmBound ab = theorem2_arm(instance, a, T, c, eps, cfg.bounds.theta_grid, &terms);
            if (ab.pull_bound < best) {
              best = ab.pull_bound;
              best_arm = ab;
              best_terms = std::move(terms);
            }
          }
          report.arms.push_back(best_arm);
          report.terms.insert(report.terms.end(), best_terms.begin(), best_terms.end());
        } catch (const Error& e) {
          arm_failures.emplace_back(a, e);
        }
      }
    }
    if (failure) {
      rows.push_back({"theorem2", "all", "total", detail::skipped(*failure)});
    } else {
      report.total = 0.0;
      for (const auto& ab : report.arms) report.total += ab.contribution;
      std::vector<BoundRow> part;
      detail::append_report(part, report);
      if (!arm_failures.empty()) part.back().value = "skipped:PartialArms";
      rows.insert(rows.end(), part.begin(), part.end() - 1);
      for (const auto& [a, e] : arm_failures) rows.push_back({"theorem2", std::to_string(a), "pull_bound", detail::skipped(e)});
      rows.push_back(part.back());
    }
  }

  try {
    const auto base = baseline_bounds(instance, T);
    detail::append_report(rows, base.ucb1);
    detail::append_report(rows, base.ucbv);
  } catch (const Error& e) {
    rows.push_back({"ucb1", "all", "total", detail::skipped(e)});
    rows.push_back({"ucbv", "all", "total", detail::skipped(e)});
  }
  return rows;
}

inline std::string bounds_csv(const std::vector<BoundRow>& rows) {
  std::string out = "bound_name,arm,term,value\n";
  for (const auto& r : rows) out += r.bound_name + "," + r.arm + "," + r.term + "," + r.value + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Running.

struct PolicyOutcome {
  PolicyKind kind;
  AggregateResult result;
};

struct ExperimentOutput {
  std::vector<PolicyOutcome> outcomes;
  std::vector<BoundRow> bounds;
  std::vector<std::filesystem::path> files;
};

inline std::string regret_csv(const std::vector<PolicyOutcome>& outcomes) {
  std::string out = "policy,checkpoint_t,mean_regret,stderr\n";
  for (const auto& o : outcomes) {
    const auto& r = o.result;
    for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
      out += o.kind.name() + "," + std::to_string(r.checkpoints[c]) + "," + format_double(r.mean_regret[c]) + "," +
             format_double(r.stderr_regret[c]) + "\n";
    }
  }
  return out;
}

inline std::string pulls_csv(const std::vector<PolicyOutcome>& outcomes) {
  std::string out = "policy,arm,mean_pulls,stderr\n";
  for (const auto& o : outcomes) {
    for (std::size_t a = 0; a < o.result.mean_pulls.size(); ++a) {
      out += o.kind.name() + "," + std::to_string(a) + "," + format_double(o.result.mean_pulls[a]) + "," +
             format_double(o.result.stderr_pulls[a]) + "\n";
    }
  }
  return out;
}

inline nlohmann::json manifest(const ExperimentConfig& cfg, const std::vector<PolicyOutcome>& outcomes) {
  using nlohmann::json;
  json j;
  j["config"] = to_json(cfg);
  j["base_seed"] = cfg.seed;
  std::vector<std::string> child;
  for (std::uint64_t r = 0; r < cfg.replications; ++r) child.push_back(format_hex(RandomSource::child_seed(cfg.seed, r)));
  j["child_seeds"] = child;
  j["checkpoints"] = cfg.checkpoint_list();
  j["policy_constants"] = {{"ucb1", "mean + sqrt(2 log t / n)"},
                           {"ucbv", "mean + sqrt(2 V log t / n) + 3 log t / n (zeta=1, b=1, c=1, plug-in variance)"},
                           {"k_bernoulli", "largest q with n kl(mean, q) <= f(t)"},
                           {"k_inf", "largest q with n K_inf(empirical, q) <= f(t)"}};
  json hashes = json::object();
  for (const auto& o : outcomes) {
    std::vector<std::string> h;
    for (auto x : o.result.action_log_hashes) h.push_back(format_hex(x));
    hashes[o.kind.name()] = h;
  }
  j["action_log_hashes"] = hashes;
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace detail

/// Runs every configured policy and writes <out>_regret.csv, <out>_pulls.csv,
/// <out>_bounds.csv and <out>_manifest.json. `workers` = 0 uses all cores;
/// the output does not depend on it.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, unsigned workers = 0) {
  validate(cfg);
  const BanditInstance instance = cfg.instance();
  const auto checkpoints = cfg.checkpoint_list();
  ExperimentOutput out;
  for (const auto& kind : cfg.policies) {
    out.outcomes.push_back({kind, run_many(instance, kind, cfg.horizon, cfg.replications, cfg.seed, checkpoints, workers)});
  }
  out.bounds = bound_rows(cfg);

  const std::string prefix = cfg.out;
  const auto parent = std::filesystem::path(prefix).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + parent.string() + ": " + ec.message());
  }
  const std::filesystem::path regret = prefix + "_regret.csv";
  const std::filesystem::path pulls = prefix + "_pulls.csv";
  const std::filesystem::path bounds = prefix + "_bounds.csv";
  const std::filesystem::path man = prefix + "_manifest.json";
  detail::write_file(regret, regret_csv(out.outcomes));
  detail::write_file(pulls, pulls_csv(out.outcomes));
  detail::write_file(bounds, bounds_csv(out.bounds));
  detail::write_file(man, manifest(cfg, out.outcomes).dump(2) + "\n");
  out.files = {regret, pulls, bounds, man};
  return out;
}

}  // namespace klbandit
