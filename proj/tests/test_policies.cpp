#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "klbandit/policies.hpp"

using namespace klbandit;

namespace {

const std::vector<PolicyKind> kAllKinds{
    {PolicyTag::KBernoulli, ExplorationKind::Theorem1},
    {PolicyTag::KBernoulli, ExplorationKind::LogT},
    {PolicyTag::KInf, ExplorationKind::LogT},
    {PolicyTag::KInf, ExplorationKind::Theorem1},
    {PolicyTag::UCB1, ExplorationKind::LogT},
    {PolicyTag::UCBV, ExplorationKind::LogT},
};

}  // namespace

TEST(PolicyKind, Names) {
  EXPECT_EQ((PolicyKind{PolicyTag::KBernoulli, ExplorationKind::Theorem1}.name()), "k_bernoulli:theorem1");
  EXPECT_EQ((PolicyKind{PolicyTag::KInf, ExplorationKind::LogT}.name()), "k_inf:log_t");
  EXPECT_EQ((PolicyKind{PolicyTag::UCB1, ExplorationKind::Theorem1}.name()), "ucb1");
  EXPECT_EQ((PolicyKind{PolicyTag::UCBV, ExplorationKind::LogT}.name()), "ucbv");
  // Exploration is irrelevant for the baselines.
  EXPECT_EQ((PolicyKind{PolicyTag::UCB1, ExplorationKind::Theorem1}), (PolicyKind{PolicyTag::UCB1, ExplorationKind::LogT}));
  EXPECT_NE((PolicyKind{PolicyTag::KInf, ExplorationKind::Theorem1}), (PolicyKind{PolicyTag::KInf, ExplorationKind::LogT}));
}

TEST(PolicyState, NeedsTwoArms) {
  try {
    PolicyState s({}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoArms);
  }
}

TEST(PolicyState, Update) {
  PolicyState s({}, 2);
  s = update(s, 0, 1.0);
  EXPECT_EQ(s.arm(0).pulls, 1u);
  EXPECT_EQ(s.arm(0).mean(), 1.0);
  EXPECT_EQ(s.t(), 1u);

  PolicyState h({}, 3);
  h.update(0, 0.5);
  h.update(0, 0.5);
  EXPECT_EQ(h.arm(0).mean(), 0.5);
  EXPECT_EQ(h.arm(0).empirical.count(0.5), 2u);
  EXPECT_EQ(h.arm(0).empirical.total(), 2u);
  EXPECT_EQ(h.arm(1), ArmRecord{});
  EXPECT_EQ(h.arm(2), ArmRecord{});

  const PolicyState before = h;
  h.update(2, 0.25);
  EXPECT_EQ(h.arm(0), before.arm(0));
  EXPECT_EQ(h.arm(1), before.arm(1));
  EXPECT_EQ(h.t(), 3u);

  for (double bad : {-0.1, 1.5, std::nan("")}) {
    try {
      h.update(0, bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ValueOutOfRange);
    }
  }
  EXPECT_THROW(h.update(3, 0.5), Error);
  EXPECT_EQ(h.t(), 3u);
}

TEST(SelectArm, InitializationOrder) {
  for (const auto& kind : kAllKinds) {
    PolicyState s(kind, 3);
    EXPECT_EQ(select_arm(s), 0u);
    s.update(0, 0.3);
    s.update(2, 0.7);  // pulls = (1, 0, 1)
    EXPECT_EQ(select_arm(s), 1u);
  }
}

TEST(SelectArm, DominantArmAfterInitialization) {
  for (const auto& kind : {PolicyKind{PolicyTag::KBernoulli, ExplorationKind::Theorem1},
                           PolicyKind{PolicyTag::KInf, ExplorationKind::LogT}}) {
    PolicyState s(kind, 2);
    s.update(0, 1.0);
    s.update(1, 0.0);
    EXPECT_EQ(select_arm(s), 0u) << kind.name();
  }
}

TEST(SelectArm, SymmetricStatesPickLowestIndex) {
  for (const auto& kind : kAllKinds) {
    PolicyState s(kind, 2);
    for (int i = 0; i < 5; ++i) {
      s.update(0, 0.4);
      s.update(1, 0.4);
    }
    EXPECT_EQ(select_arm(s), 0u) << kind.name();
  }
}

TEST(SelectArm, SaturatedIndexWins) {
  // Arm 1 saturates at 1 and wins outright.
  PolicyState s({PolicyTag::KBernoulli, ExplorationKind::Theorem1}, 2);
  s.update(0, 0.0);
  s.update(1, 1.0);
  EXPECT_EQ(s.index(1), 1.0);
  EXPECT_EQ(select_arm(s), 1u);
}

TEST(SelectArm, IsArgmaxOfIndex) {
  RandomSource r(21);
  const std::vector<double> values{0.0, 0.1, 0.5, 0.9, 1.0};
  for (const auto& kind : kAllKinds) {
    for (int trial = 0; trial < 200; ++trial) {
      PolicyState s(kind, 4);
      const int rounds = 4 + static_cast<int>(r.next_u64() % 60);
      for (int i = 0; i < rounds; ++i) s.update(r.next_u64() % 4 == 0 ? 0 : i % 4, values[r.next_u64() % values.size()]);
      bool all_pulled = true;
      for (std::size_t a = 0; a < 4; ++a) all_pulled &= s.arm(a).pulls > 0;
      if (!all_pulled) continue;
      const std::size_t chosen = select_arm(s);
      const double best = s.index(chosen);
      for (std::size_t a = 0; a < 4; ++a) {
        const double idx = s.index(a);
        EXPECT_LE(idx, best) << kind.name();
        if (idx == best && a != chosen) {
          EXPECT_TRUE(s.arm(chosen).mean() > s.arm(a).mean() ||
                      (s.arm(chosen).mean() == s.arm(a).mean() && chosen < a));
        }
      }
    }
  }
}

TEST(Index, BaselineFormulas) {
  PolicyState u({PolicyTag::UCB1, ExplorationKind::LogT}, 2);
  u.update(0, 1.0);
  u.update(0, 0.0);
  u.update(1, 0.5);
  const double log_t = std::log(3.0);
  EXPECT_NEAR(u.index(0), 0.5 + std::sqrt(2.0 * log_t / 2.0), 1e-15);
  EXPECT_NEAR(u.index(1), 0.5 + std::sqrt(2.0 * log_t), 1e-15);

  PolicyState v({PolicyTag::UCBV, ExplorationKind::LogT}, 2);
  v.update(0, 1.0);
  v.update(0, 0.0);
  v.update(1, 0.5);
  // Plug-in variance of {1, 0} is 1/4.
  EXPECT_NEAR(v.index(0), 0.5 + std::sqrt(2.0 * 0.25 * log_t / 2.0) + 3.0 * log_t / 2.0, 1e-15);
  EXPECT_NEAR(v.index(1), 0.5 + 3.0 * log_t, 1e-15);
}

TEST(Index, KStrategiesUseCurrentRound) {
  PolicyState s({PolicyTag::KInf, ExplorationKind::LogT}, 2);
  s.update(0, 0.2);
  s.update(0, 0.6);
  s.update(1, 0.5);
  EXPECT_NEAR(s.index(0), b_plus_kinf(FiniteDist::make({0.2, 0.6}, {0.5, 0.5}), 2, std::log(3.0)), 1e-15);
  PolicyState b({PolicyTag::KBernoulli, ExplorationKind::Theorem1}, 2);
  b.update(0, 1.0);
  b.update(1, 0.0);
  b.update(1, 1.0);
  EXPECT_EQ(b.index(1), b_plus_bernoulli(0.5, 2, exploration(ExplorationKind::Theorem1, 3)));
}

TEST(Policies, MeanMatchesFrozenEmpirical) {
  RandomSource r(22);
  PolicyState s({PolicyTag::KInf, ExplorationKind::LogT}, 3);
  for (int i = 0; i < 3000; ++i) s.update(i % 3, static_cast<double>(r.next_u64() % 11) / 10.0);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(s.arm(a).mean(), freeze(s.arm(a).empirical).mean(), 1e-12);
}

TEST(Policies, BinaryRewardsGiveIdenticalActions) {
  // On {0,1} rewards the K_inf index reduces to the Bernoulli KL index.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomSource r(seed);
    const std::vector<double> p{0.7, 0.5, 0.65};
    PolicyState kb({PolicyTag::KBernoulli, ExplorationKind::LogT}, 3);
    PolicyState ki({PolicyTag::KInf, ExplorationKind::LogT}, 3);
    for (int t = 0; t < 500; ++t) {
      const std::size_t a = select_arm(kb);
      ASSERT_EQ(select_arm(ki), a) << "seed " << seed << " round " << t;
      const double reward = r.uniform() < p[a] ? 1.0 : 0.0;
      kb.update(a, reward);
      ki.update(a, reward);
    }
  }
}

TEST(Policies, ReplayIsDeterministic) {
  RandomSource r(23);
  std::vector<double> rewards(400);
  for (auto& x : rewards) x = static_cast<double>(r.next_u64() % 5) / 4.0;
  for (const auto& kind : kAllKinds) {
    std::vector<std::size_t> first;
    for (int pass = 0; pass < 2; ++pass) {
      PolicyState s(kind, 3);
      std::vector<std::size_t> actions;
      for (double x : rewards) {
        const std::size_t a = select_arm(s);
        actions.push_back(a);
        s.update(a, x);
      }
      if (pass == 0) first = actions;
      else EXPECT_EQ(actions, first) << kind.name();
    }
  }
}
