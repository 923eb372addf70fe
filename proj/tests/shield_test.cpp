#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "oshield/shield.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"

using namespace oshield;

namespace {

// A fork: the avatar walks s -> b and then picks the c-branch or the
// d-branch. The adversary idles at c and either comes towards b or steps
// aside to x.
Arena fork_arena() {
  ArenaDescription d;
  for (const char* id : {"s", "b", "c1", "c", "d1", "d", "x"}) d.nodes.push_back({id, {}, {}});
  auto both = [&](const char* u, const char* v) {
    d.edges.emplace_back(u, v);
    d.edges.emplace_back(v, u);
  };
  both("s", "b");
  both("b", "c1");
  both("c1", "c");
  both("b", "d1");
  both("d1", "d");
  both("c", "x");
  d.decision_locations = {"s", "b", "c", "d", "x"};
  d.tasks = {{"s", {{"s", "b"}}},
             {"b", {{"b", "c1", "c"}, {"b", "d1", "d"}}},
             {"c", {{"c", "c1", "b"}, {"c", "x"}}},
             {"d", {{"d", "d1", "b"}}},
             {"x", {{"x", "c"}}}};
  return build_arena(d);
}

struct Fork {
  Arena arena = fork_arena();
  LocationId id(const char* name) const { return *arena.find(name); }
  TaskId task_from(const char* from, const char* next) const {
    for (TaskId t : arena.tasks_at(id(from))) {
      if (arena.task(t).path[1] == id(next)) return t;
    }
    return kNoTask;
  }
  PlainState root() const {
    PlainState s = initial_state(std::vector<LocationId>{id("s"), id("c")});
    s.queues[0] = {task_from("s", "b"), 0};
    return s;
  }
  AdversaryBehavior behavior(double towards_b) const {
    return weighted_behavior(arena, {{id("c"), {towards_b, 1.0 - towards_b}}});
  }
};

auto never = [](const PlainState&) { return false; };

}  // namespace

TEST(Shield, CertainCollisionVersusFree) {
  const Fork f;
  const std::vector<AdversaryBehavior> b{f.behavior(1.0)};
  const Model<PlainDynamics> model{f.arena, b};
  const auto m = build_submdp(model, f.root(), 1, fixtures::Collision{});
  const auto v = valuations(m);
  EXPECT_EQ(v.value(f.task_from("b", "c1")), 1.0);
  EXPECT_EQ(v.value(f.task_from("b", "d1")), 0.0);
  EXPECT_EQ(v.optimal, 0.0);
  EXPECT_EQ(min_reach_probability(m), 0.0);
}

TEST(Shield, CoinFlipAdversary) {
  const Fork f;
  const std::vector<AdversaryBehavior> b{f.behavior(0.5)};
  const Model<PlainDynamics> model{f.arena, b};
  const auto v = valuations(build_submdp(model, f.root(), 1, fixtures::Collision{}));
  EXPECT_NEAR(v.value(f.task_from("b", "c1")), 0.5, 1e-9);
  EXPECT_EQ(v.value(f.task_from("b", "d1")), 0.0);
}

TEST(Shield, EmptyAndAbsorbingTargets) {
  const Fork f;
  const std::vector<AdversaryBehavior> b{f.behavior(0.5)};
  const Model<PlainDynamics> model{f.arena, b};
  const auto safe = build_submdp(model, f.root(), 2, never);
  EXPECT_EQ(min_reach_probability(safe), 0.0);
  for (double x : valuations(safe).values) EXPECT_EQ(x, 0.0);

  PlainState on_top = f.root();
  on_top.positions[1] = on_top.positions[0];
  const auto hit = build_submdp(model, on_top, 2, fixtures::Collision{});
  EXPECT_EQ(min_reach_probability(hit), 1.0);
  const auto a = analyze(f.arena, hit);
  for (double x : a.valuation.values) EXPECT_EQ(x, 1.0);
  EXPECT_EQ(a.valuation.size(), f.arena.tasks_at(f.id("b")).size());
}

TEST(Shield, SoloAvatarHasZeroValues) {
  const Arena a = gridworld_from_ascii(".....\n.###.\n.....\n.###.\n.....\n");
  const Model<PlainDynamics> model{a, {}};
  PlainState s = initial_state(std::vector<LocationId>{*a.at(1, 1)});
  s.queues[0] = {a.tasks_at(*a.at(1, 1))[0], 0};
  for (double x : valuations(build_submdp(model, s, 3, fixtures::Collision{})).values) EXPECT_EQ(x, 0.0);
}

TEST(Shield, MakeShieldExamples) {
  const auto v = make_valuation({0, 1}, {0.2, 0.4});
  EXPECT_EQ(make_shield(v, 0.5).allowed, (std::vector<TaskId>{0, 1}));
  EXPECT_EQ(make_shield(v, 1.0).allowed, (std::vector<TaskId>{0}));
  const auto w = make_valuation({3, 5}, {0.0, 0.3});
  EXPECT_EQ(make_shield(w, 1.0).allowed, (std::vector<TaskId>{3}));
  EXPECT_EQ(make_shield(w, 0.0).allowed, (std::vector<TaskId>{3, 5}));
  EXPECT_THROW(make_shield(w, 1.5), DeltaOutOfRange);
  EXPECT_THROW(make_shield(w, -0.1), DeltaOutOfRange);
  EXPECT_THROW(make_shield(w, std::nan("")), DeltaOutOfRange);
}

TEST(Shield, AbsoluteThresholdCanDeadlock) {
  // Every task is risky; a fixed cut-off at 0.1 leaves nothing to choose,
  // while the relative shield always keeps the argmin.
  const auto v = make_valuation({0, 1, 2}, {0.5, 0.6, 0.9});
  const auto under = std::count_if(v.values.begin(), v.values.end(), [](double x) { return x <= 0.1; });
  EXPECT_EQ(under, 0);
  EXPECT_EQ(make_shield(v, 1.0).allowed, (std::vector<TaskId>{0}));
}

TEST(Shield, RiskBands) {
  EXPECT_EQ(risk_band(0.0), RiskBand::Green);
  EXPECT_EQ(risk_band(1e-12), RiskBand::Yellow);
  EXPECT_EQ(risk_band(1.0 / 3.0), RiskBand::Yellow);
  EXPECT_EQ(risk_band(0.4), RiskBand::Orange);
  EXPECT_EQ(risk_band(2.0 / 3.0), RiskBand::Orange);
  EXPECT_EQ(risk_band(0.9), RiskBand::Red);
  EXPECT_EQ(risk_band(1.0), RiskBand::Red);
  const auto bands = risk_bands(make_valuation({0, 1, 2}, {0.0, 0.4, 0.9}));
  EXPECT_EQ(bands.at(0), RiskBand::Green);
  EXPECT_EQ(bands.at(1), RiskBand::Orange);
  EXPECT_EQ(bands.at(2), RiskBand::Red);
  EXPECT_EQ(to_string(RiskBand::Orange), "orange");
}

TEST(Shield, UpdateAfterCoinFlip) {
  const Fork f;
  const std::vector<AdversaryBehavior> b{f.behavior(0.5)};
  const Model<PlainDynamics> model{f.arena, b};
  const PlainState root = f.root();
  const auto before = analyze(model, root, 1, fixtures::Collision{});
  const TaskId risky = f.task_from("b", "c1");
  const TaskId free = f.task_from("b", "d1");

  // Avatar moves s -> b, then the adversary's decision resolves.
  const PlainState moved = successors(model, root, Move{})[0].state;
  for (const auto& tr : successors(model, moved, AdvDecide{})) {
    UpdateInfo info;
    const Shield s = update_shield(model, tr.state, 1, 1.0, fixtures::Collision{}, &before, &info);
    EXPECT_TRUE(info.reused);
    const double expected = tr.task == f.task_from("c", "c1") ? 1.0 : 0.0;
    EXPECT_EQ(s.valuation.value(risky), expected);
    EXPECT_EQ(s.valuation.value(free), 0.0);
    fixtures::Oracle oracle(f.arena, b, 1'000'000);
    EXPECT_EQ(oracle.task_values(fixtures::oracle_agents(tr.state), 1, 1).at(risky), expected);
  }

  // Nothing resolved yet: same shield.
  const Shield again = update_shield(model, root, 1, 0.7, fixtures::Collision{}, &before);
  EXPECT_EQ(again.allowed, make_shield(before.valuation, 0.7).allowed);
  EXPECT_EQ(again.valuation.values, before.valuation.values);
}

TEST(Shield, MatchesOracleOnRandomInstances) {
  fixtures::Rng rng(99);
  int compared = 0;
  while (compared < 60) {
    const auto in = fixtures::random_instance(rng);
    const Model<PlainDynamics> model{in.arena, in.behaviors};
    fixtures::Oracle oracle(in.arena, in.behaviors, 2'000'000);
    std::map<TaskId, double> expected;
    try {
      expected = oracle.task_values(fixtures::oracle_agents(in.root), 0, static_cast<int>(in.horizon));
    } catch (const fixtures::OracleBudgetExceeded&) {
      continue;
    }
    const auto got = analyze(model, in.root, in.horizon, fixtures::Collision{}).valuation;
    ASSERT_EQ(got.size(), expected.size());
    for (auto [t, x] : expected) EXPECT_NEAR(got.value(t), x, 1e-9);
    ++compared;
  }
}

TEST(Shield, AlgebraOnRandomValuations) {
  fixtures::Rng rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int round = 0; round < 2000; ++round) {
    const int n = fixtures::uniform_int(rng, 1, 5);
    std::vector<TaskId> tasks;
    std::vector<double> values;
    for (int i = 0; i < n; ++i) {
      tasks.push_back(static_cast<TaskId>(i * 2));
      // Include exact zeros and ties.
      const int kind = fixtures::uniform_int(rng, 0, 3);
      values.push_back(kind == 0 ? 0.0 : kind == 1 ? 0.5 : unit(rng));
    }
    const auto v = make_valuation(tasks, values);
    EXPECT_EQ(make_shield(v, 0.0).allowed, tasks);
    std::vector<TaskId> argmin;
    for (int i = 0; i < n; ++i) {
      if (values[static_cast<std::size_t>(i)] == v.optimal) argmin.push_back(tasks[static_cast<std::size_t>(i)]);
    }
    EXPECT_EQ(make_shield(v, 1.0).allowed, argmin);
    const double d1 = unit(rng), d2 = unit(rng);
    const auto lo = make_shield(v, std::min(d1, d2)).allowed;
    const auto hi = make_shield(v, std::max(d1, d2)).allowed;
    EXPECT_FALSE(hi.empty());
    EXPECT_TRUE(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
  }
}

TEST(Shield, UpdateEqualsFreshOnRandomResolutions) {
  fixtures::Rng rng(31);
  int resolutions = 0;
  while (resolutions < 300) {
    const auto in = fixtures::random_instance(rng);
    if (in.behaviors.empty()) continue;
    const Model<PlainDynamics> model{in.arena, in.behaviors};
    const auto before = analyze(model, in.root, in.horizon, fixtures::Collision{});
    for (const PlainState& seen : fixtures::adversary_resolutions(model, in.root, rng)) {
      const double delta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      UpdateInfo info;
      const Shield updated = update_shield(model, seen, in.horizon, delta, fixtures::Collision{}, &before, &info);
      const Shield fresh = make_shield(analyze(model, seen, in.horizon, fixtures::Collision{}).valuation, delta);
      EXPECT_TRUE(info.reused);
      ASSERT_EQ(updated.allowed, fresh.allowed);
      ASSERT_EQ(updated.valuation.tasks, fresh.valuation.tasks);
      ASSERT_EQ(updated.valuation.values, fresh.valuation.values);
      for (std::size_t k = 0; k < before.valuation.size(); ++k) {
        if (before.valuation.values[k] == 0.0) {
          EXPECT_EQ(updated.valuation.value(before.valuation.tasks[k]), 0.0);
        }
      }
      ++resolutions;
    }
  }
}
