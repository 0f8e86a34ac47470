// bandit: run simulations, evaluate regret bounds, and check the
// concentration certificates.
//
//   bandit run config.json [--out PREFIX] [--seed N] [--horizon T] [--replications R]
//   bandit bounds config.json
//   bandit verify [--reps N]
//
// Exit codes: 0 success, 1 validation error, 2 certificate failure, 3 I/O.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "klbandit/experiment.hpp"
#include "klbandit/klbandit.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kCertificate = 2, kIo = 3 };

unsigned workers_from_env() {
  const char* v = std::getenv("BANDIT_WORKERS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0') {
    throw klbandit::Error(klbandit::ErrorKind::ValidationError, "BANDIT_WORKERS must be a non-negative integer");
  }
  return static_cast<unsigned>(n);
}

int run_command(const std::string& path, const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed,
                const std::optional<std::uint64_t>& horizon, const std::optional<std::uint64_t>& reps) {
  klbandit::ExperimentConfig cfg = klbandit::parse_config(path);
  if (out) cfg.out = *out;
  if (seed) cfg.seed = *seed;
  if (horizon) cfg.horizon = *horizon;
  if (reps) cfg.replications = *reps;
  const auto result = klbandit::run_experiment(cfg, workers_from_env());
  for (const auto& f : result.files) std::cout << f.string() << "\n";
  return kOk;
}

int bounds_command(const std::string& path) {
  const auto cfg = klbandit::parse_config(path);
  std::cout << klbandit::bounds_csv(klbandit::bound_rows(cfg));
  return kOk;
}

void report(const char* suite, const std::string& label, const klbandit::McCheck& c, bool& ok) {
  std::printf("%-10s %-36s freq=%-12.6g bound=%-12.6g allowance=%-12.6g %s\n", suite, label.c_str(),
              c.empirical_frequency, c.bound, c.allowance(), c.passes() ? "PASS" : "FAIL");
  ok &= c.passes();
}

int verify_command(std::uint64_t reps) {
  bool ok = true;
  for (const auto& s : klbandit::deviation_suite()) {
    char label[96];
    std::snprintf(label, sizeof label, "p=%g t=%llu eps=%g", s.p, static_cast<unsigned long long>(s.t), s.epsilon);
    report("deviation", label, klbandit::mc_check_deviation(s.p, s.t, s.epsilon, reps), ok);
  }
  for (const auto& s : klbandit::types_suite()) {
    char label[96];
    std::snprintf(label, sizeof label, "|S|=%zu k=%llu gamma=%g", s.nu.size(), static_cast<unsigned long long>(s.k), s.gamma);
    report("types", label, klbandit::mc_check_types(s.nu, s.k, s.gamma, reps), ok);
  }
  double worst = 0.0;
  const auto cases = klbandit::dual_primal_suite();
  for (const auto& c : cases) worst = std::max(worst, c.gap());
  const bool dp = worst <= klbandit::kDualPrimalTolerance;
  std::printf("%-10s %-36s max|dual-primal|=%-12.6g tol=%-12.6g %s\n", "k_inf", (std::to_string(cases.size()) + " cases").c_str(),
              worst, klbandit::kDualPrimalTolerance, dp ? "PASS" : "FAIL");
  ok &= dp;
  return ok ? kOk : kCertificate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-based bandit index policies: simulation, regret bounds, certificates"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> replications;
  auto* run = app.add_subcommand("run", "simulate every configured policy and write CSV/manifest files");
  run->add_option("config", config, "experiment JSON")->required();
  run->add_option("--out", out, "output path prefix");
  run->add_option("--seed", seed, "base seed");
  run->add_option("--horizon", horizon, "number of rounds T");
  run->add_option("--replications", replications, "number of replications R");

  std::string bounds_config;
  auto* bounds = app.add_subcommand("bounds", "print the bound table as CSV");
  bounds->add_option("config", bounds_config, "experiment JSON")->required();

  std::uint64_t reps = 100000;
  auto* verify = app.add_subcommand("verify", "run the concentration and K_inf certificate suites");
  verify->add_option("--reps", reps, "Monte Carlo replications per certificate")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return run_command(config, out, seed, horizon, replications);
    if (*bounds) return bounds_command(bounds_config);
    if (*verify) return verify_command(reps);
  } catch (const klbandit::Error& e) {
    std::cerr << "bandit: " << e.what() << "\n";
    return e.kind() == klbandit::ErrorKind::IoError ? kIo : kValidation;
  } catch (const std::exception& e) {
    std::cerr << "bandit: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
