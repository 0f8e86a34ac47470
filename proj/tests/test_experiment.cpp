#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "klbandit/experiment.hpp"

using namespace klbandit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("klbandit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

template <class F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorKind::IoError, "none");
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(BANDIT_EXE) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kMinimal = R"({"arms":[{"bernoulli":0.9},{"bernoulli":0.8}],"policies":["k_bernoulli"],"T":1000})";

}  // namespace

TEST(ParseConfig, DefaultsApplied) {
  const auto cfg = parse_config_text(kMinimal);
  EXPECT_EQ(cfg.arms.size(), 2u);
  EXPECT_EQ(cfg.horizon, 1000u);
  EXPECT_EQ(cfg.replications, 100u);
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_EQ(std::get<std::size_t>(cfg.checkpoints), 50u);
  ASSERT_EQ(cfg.policies.size(), 1u);
  EXPECT_EQ(cfg.policies[0].name(), "k_bernoulli:theorem1");
  EXPECT_EQ(cfg.checkpoint_list(), log_checkpoints(1000, 50));
}

TEST(ParseConfig, FullForm) {
  const auto cfg = parse_config_text(R"({
    "arms": [{"support": [0, 0.5, 1], "weights": [0.2, 0.3, 0.5]}, {"bernoulli": 0.4}],
    "policies": ["k_inf", {"name": "k_bernoulli", "exploration": "log_t"}, "ucb1", "ucbv", "k_inf:theorem1"],
    "T": 500, "replications": 7, "seed": 12, "checkpoints": [10, 100, 500], "out": "x/y",
    "bounds": {"c_grid": {"min": 0.1, "max": 1, "points": 3}, "epsilon_fraction": 0.5, "theta_grid": 40}
  })");
  EXPECT_EQ(cfg.arms[0], FiniteDist::make({0, 0.5, 1}, {0.2, 0.3, 0.5}));
  EXPECT_EQ(cfg.policies[0].name(), "k_inf:log_t");
  EXPECT_EQ(cfg.policies[1].name(), "k_bernoulli:log_t");
  EXPECT_EQ(cfg.policies[4].name(), "k_inf:theorem1");
  EXPECT_EQ(cfg.checkpoint_list(), (std::vector<std::uint64_t>{10, 100, 500}));
  EXPECT_EQ(cfg.bounds.c_grid().size(), 3u);
  EXPECT_EQ(cfg.bounds.theta_grid, 40);
  EXPECT_EQ(cfg.out, "x/y");
  EXPECT_EQ(parse_config_text(R"({"arms":[{"bernoulli":0.9},{"bernoulli":0.8}],"policies":["ucb1"],"T":10,"checkpoints":"log7"})")
                .checkpoint_list(),
            log_checkpoints(10, 7));
}

TEST(ParseConfig, WeightsNotSummingToOneNameTheArm) {
  const auto e = error_of([] {
    parse_config_text(R"({"arms":[{"bernoulli":0.9},{"support":[0,1],"weights":[0.5,0.3]}],"policies":["ucb1"],"T":10})");
  });
  EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
  EXPECT_NE(std::string(e.what()).find("arms[1]"), std::string::npos);
}

TEST(ParseConfig, UnknownPolicyListsValidTags) {
  const auto e = error_of([] {
    parse_config_text(R"({"arms":[{"bernoulli":0.9},{"bernoulli":0.8}],"policies":["thompson"],"T":10})");
  });
  EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
  const std::string msg = e.what();
  for (const char* tag : {"k_bernoulli", "k_inf", "ucb1", "ucbv"}) EXPECT_NE(msg.find(tag), std::string::npos);
}

TEST(ParseConfig, UnknownFieldsRejected) {
  EXPECT_EQ(error_of([] { parse_config_text(R"({"arms":[],"policies":[],"T":1,"extra":1})"); }).kind(), ErrorKind::ValidationError);
  EXPECT_EQ(error_of([] {
              parse_config_text(R"({"arms":[{"bernoulli":0.5,"x":1},{"bernoulli":0.4}],"policies":["ucb1"],"T":10})");
            }).kind(),
            ErrorKind::ValidationError);
  EXPECT_EQ(error_of([] {
              parse_config_text(R"({"arms":[{"bernoulli":0.5},{"bernoulli":0.4}],"policies":["ucb1"],"T":10,"bounds":{"c":1}})");
            }).kind(),
            ErrorKind::ValidationError);
}

TEST(ParseConfig, ParseErrorReportsLine) {
  const auto e = error_of([] { parse_config_text("{\n  \"arms\": [\n    {\"bernoulli\": 0.9},\n  ]\n}"); });
  EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
}

TEST(ParseConfig, CrossFieldValidation) {
  auto cfg = parse_config_text(kMinimal);
  cfg.horizon = 1;
  EXPECT_EQ(error_of([&] { validate(cfg); }).kind(), ErrorKind::ValidationError);
  cfg = parse_config_text(kMinimal);
  cfg.checkpoints = std::vector<std::uint64_t>{5000};
  EXPECT_EQ(error_of([&] { validate(cfg); }).kind(), ErrorKind::ValidationError);
  EXPECT_EQ(error_of([] { parse_config("/nonexistent/config.json"); }).kind(), ErrorKind::IoError);
}

TEST(ParseConfig, EchoRoundTrips) {
  const auto cfg = parse_config_text(R"({
    "arms": [{"support": [0, 0.5, 1], "weights": [0.2, 0.3, 0.5]}, {"bernoulli": 0.4}],
    "policies": ["k_inf", "ucbv"], "T": 500, "seed": 3})");
  const auto again = parse_config_text(to_json(cfg).dump());
  EXPECT_EQ(again.arms, cfg.arms);
  EXPECT_EQ(again.policies, cfg.policies);
  EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(FormatDouble, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 2.2520996985245301, 1e-300, 12345678.9}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(RunExperiment, WritesAllFiles) {
  const auto dir = scratch("run");
  auto cfg = parse_config_text(
      R"({"arms":[{"bernoulli":0.9},{"bernoulli":0.8}],"policies":["k_bernoulli","ucb1"],"T":300,"replications":4})");
  cfg.out = (dir / "exp").string();
  const auto out = run_experiment(cfg, 1);
  ASSERT_EQ(out.files.size(), 4u);
  for (const auto& f : out.files) EXPECT_TRUE(fs::exists(f)) << f;

  std::istringstream regret(slurp(dir / "exp_regret.csv"));
  std::string line;
  std::getline(regret, line);
  EXPECT_EQ(line, "policy,checkpoint_t,mean_regret,stderr");
  std::map<std::string, std::set<std::string>> seen;
  while (std::getline(regret, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    seen[line.substr(0, c1)].insert(line.substr(c1 + 1, c2 - c1 - 1));
  }
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen["k_bernoulli:theorem1"], seen["ucb1"]);
  EXPECT_EQ(seen["ucb1"].size(), cfg.checkpoint_list().size());

  EXPECT_EQ(slurp(dir / "exp_pulls.csv").substr(0, 30), "policy,arm,mean_pulls,stderr\nk");
  const auto bounds = slurp(dir / "exp_bounds.csv");
  EXPECT_EQ(bounds.rfind("bound_name,arm,term,value\n", 0), 0u);
  for (const char* name : {"lower_bound_slope,", "theorem1,", "theorem2,", "ucb1,", "ucbv,"}) {
    EXPECT_NE(bounds.find(std::string("\n") + name), std::string::npos) << name;
  }

  const auto manifest = nlohmann::json::parse(slurp(dir / "exp_manifest.json"));
  EXPECT_EQ(manifest["base_seed"], 0);
  EXPECT_EQ(manifest["child_seeds"].size(), 4u);
  EXPECT_EQ(manifest["action_log_hashes"]["ucb1"].size(), 4u);
  EXPECT_EQ(manifest["config"]["T"], 300);
}

TEST(RunExperiment, RerunIsByteIdentical) {
  const auto dir = scratch("rerun");
  auto cfg = parse_config_text(R"({"arms":[{"support":[0,0.5,1],"weights":[0.2,0.3,0.5]},{"bernoulli":0.5}],
    "policies":["k_inf","ucbv"],"T":400,"replications":6,"seed":9})");
  cfg.out = (dir / "a").string();
  run_experiment(cfg, 1);
  cfg.out = (dir / "b").string();
  run_experiment(cfg, 8);
  for (const char* suffix : {"_regret.csv", "_pulls.csv", "_bounds.csv"}) {
    EXPECT_EQ(slurp(dir / (std::string("a") + suffix)), slurp(dir / (std::string("b") + suffix))) << suffix;
  }
}

TEST(RunExperiment, MuStarOneKeepsTheorem1SpecialCaseAndSkipsTheorem2) {
  auto cfg = parse_config_text(R"({"arms":[{"bernoulli":1.0},{"bernoulli":0.5},{"bernoulli":0.2}],"policies":["ucb1"],"T":100})");
  const auto csv = bounds_csv(bound_rows(cfg));
  EXPECT_NE(csv.find("theorem1,all,special_case:mu_star_one,4\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("theorem1,all,total,4\n"), std::string::npos);
  EXPECT_NE(csv.find("theorem2,all,total,skipped:MuStarDegenerate\n"), std::string::npos);
  EXPECT_NE(csv.find("lower_bound_slope,all,total,skipped:DegenerateInstance\n"), std::string::npos);
}

TEST(RunExperiment, DegenerateArmOnlySkipsItsOwnTheorem2Rows) {
  auto cfg = parse_config_text(R"({"arms":[{"bernoulli":0.7},{"bernoulli":0.0},{"bernoulli":0.5}],"policies":["ucb1"],"T":100,
    "bounds":{"theta_grid":50}})");
  const auto csv = bounds_csv(bound_rows(cfg));
  EXPECT_NE(csv.find("theorem2,1,pull_bound,skipped:MuADegenerate\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("theorem2,2,main,"), std::string::npos);
  EXPECT_NE(csv.find("theorem2,all,total,skipped:PartialArms\n"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  {
    std::ofstream(dir / "good.json") << R"({"arms":[{"bernoulli":0.6},{"bernoulli":0.5}],"policies":["ucb1"],"T":50,"replications":2,"out":")"
                                     << (dir / "o").string() << R"("})";
    std::ofstream(dir / "bad.json") << R"({"arms":[{"bernoulli":0.6}],"policies":["ucb1"],"T":50})";
    std::ofstream(dir / "broken.json") << "{";
  }
  EXPECT_EQ(run_cli("run " + (dir / "good.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o_regret.csv"));
  EXPECT_EQ(run_cli("run " + (dir / "good.json").string() + " --out " + (dir / "p").string() + " --seed 3 --horizon 80 --replications 3"), 0);
  EXPECT_NE(slurp(dir / "p_regret.csv").find("ucb1,80,"), std::string::npos);
  EXPECT_EQ(run_cli("bounds " + (dir / "good.json").string()), 0);
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(run_cli("run " + (dir / "broken.json").string()), 1);
  EXPECT_EQ(run_cli("run " + (dir / "missing.json").string()), 3);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("verify --reps 2000"), 0);
}
