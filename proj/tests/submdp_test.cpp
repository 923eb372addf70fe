#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oshield/submdp.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"

using namespace oshield;

namespace {

const char* kMaze = ".....\n.###.\n.....\n.###.\n.....\n";

auto never = [](const PlainState&) { return false; };

PlainState post_decision(const Arena&, std::vector<LocationId> at, TaskId avatar_task) {
  PlainState s = initial_state(at);
  s.queues[0] = {avatar_task, 0};
  return s;
}

}  // namespace

TEST(SubMdp, CorridorStateCount) {
  const Arena a = gridworld_from_ascii("...");
  const std::vector<AdversaryBehavior> b{uniform_behavior(a)};
  const Model<PlainDynamics> model{a, b};
  const LocationId l = *a.at(1, 1), r = *a.at(3, 1);
  const PlainState root = post_decision(a, {l, r}, a.tasks_at(l)[0]);

  const auto m = build_submdp(model, root, 1, never);
  EXPECT_EQ(m.bound(), 3u);
  EXPECT_EQ(m.first_decision_distance(), 2u);
  EXPECT_EQ(m.size(), 10u);  // hand count
  EXPECT_EQ(m.size(), fixtures::count_states(a, b, fixtures::oracle_agents(root), 0, 1, false));
  EXPECT_EQ(m.first_decision_states().size(), 1u);

  // The snakes meet in the middle during the first round.
  const auto hit = build_submdp(model, root, 1, fixtures::Collision{});
  EXPECT_EQ(hit.size(), 4u);
  EXPECT_EQ(hit.unsafe_states().size(), 1u);
  EXPECT_TRUE(hit.first_decision_states().empty());
  EXPECT_THROW(tasks_of_first_decision(hit), NoFirstDecisionState);
}

TEST(SubMdp, SoloAvatar) {
  const Arena a = gridworld_from_ascii(kMaze);
  const Model<PlainDynamics> model{a, {}};
  const LocationId v = *a.at(1, 1);
  TaskId down = kNoTask;
  for (TaskId t : a.tasks_at(v)) {
    if (a.task(t).length() == 2) down = t;
  }
  const auto m = build_submdp(model, post_decision(a, {v}, down), 2, never);
  ASSERT_EQ(m.first_decision_states().size(), 1u);
  EXPECT_EQ(m.state(m.first_decision_states()[0]).positions[0], *a.at(1, 3));
  for (StateIndex i = 0; i < m.size(); ++i) {
    if (m.kind(i) != NodeKind::AvatarDecision) {
      EXPECT_LE(m.edges(i).size(), 1u);
    } else {
      EXPECT_EQ(m.distance(i), 2u);
    }
  }
  EXPECT_EQ(tasks_of_first_decision(m).size(), 3u);
}

TEST(SubMdp, FirstDecisionTasksAtCrossing) {
  const Arena a = gridworld_from_ascii(kMaze);
  const std::vector<AdversaryBehavior> b{uniform_behavior(a)};
  const Model<PlainDynamics> model{a, b};
  const LocationId v = *a.at(1, 1);
  TaskId down = a.tasks_at(v)[1];
  ASSERT_EQ(a.task(down).destination(), *a.at(1, 3));
  const auto m = build_submdp(model, post_decision(a, {v, *a.at(5, 5)}, down), 2, never);
  const auto tasks = tasks_of_first_decision(m);
  const auto expected = a.tasks_at(*a.at(1, 3));
  EXPECT_TRUE(std::equal(tasks.begin(), tasks.end(), expected.begin(), expected.end()));
}

TEST(SubMdp, CorridorEndpointSingleton) {
  const Arena a = gridworld_from_ascii("...");
  const Model<PlainDynamics> model{a, {}};
  const auto m = build_submdp(model, post_decision(a, {*a.at(1, 1)}, a.tasks_at(*a.at(1, 1))[0]), 1, never);
  EXPECT_EQ(tasks_of_first_decision(m).size(), 1u);
}

TEST(SubMdp, Restriction) {
  const Arena a = gridworld_from_ascii(kMaze);
  const std::vector<AdversaryBehavior> b{uniform_behavior(a)};
  const Model<PlainDynamics> model{a, b};
  const LocationId v = *a.at(1, 1);
  const auto m = build_submdp(model, post_decision(a, {v, *a.at(5, 5)}, a.tasks_at(v)[1]), 2, never);
  const auto tasks = tasks_of_first_decision(m);
  for (TaskId t : tasks) {
    const auto view = restrict_first_decision(m, t);
    for (StateIndex i : m.first_decision_states()) {
      ASSERT_EQ(view.edges(i).size(), 1u);
      EXPECT_EQ(view.edges(i)[0].task, t);
    }
  }
  EXPECT_THROW(restrict_first_decision(m, a.tasks_at(*a.at(5, 5))[0]), TaskNotAvailable);
}

TEST(SubMdp, Errors) {
  const Arena a = gridworld_from_ascii(kMaze);
  const Model<PlainDynamics> model{a, {}};
  const LocationId v = *a.at(1, 1);
  const PlainState root = post_decision(a, {v}, a.tasks_at(v)[0]);
  EXPECT_THROW(build_submdp(model, root, 0, never), HorizonZero);
  EXPECT_THROW(build_submdp(model, initial_state(std::vector<LocationId>{v}), 1, never), NotPostDecisionState);
  PlainState moved = root;
  moved.queues[0].step = 1;
  EXPECT_THROW(build_submdp(model, moved, 1, never), NotPostDecisionState);
}

TEST(SubMdp, LocalToHorizonBall) {
  const Arena small = gridworld_from_ascii(kMaze);
  const Arena large = gridworld_from_ascii(std::string(kMaze) + "#####\n.....\n#...#\n.....\n");
  auto build = [](const Arena& a) {
    const std::vector<AdversaryBehavior> b{uniform_behavior(a)};
    const Model<PlainDynamics> model{a, b};
    const LocationId v = *a.at(1, 1);
    return build_submdp(model, post_decision(a, {v, *a.at(5, 5)}, a.tasks_at(v)[1]), 3, fixtures::Collision{});
  };
  const auto x = build(small);
  const auto y = build(large);
  EXPECT_EQ(x.size(), y.size());
  EXPECT_EQ(x.edge_count(), y.edge_count());
}

TEST(SubMdp, DotExport) {
  const Arena a = gridworld_from_ascii("...");
  const Model<PlainDynamics> model{a, {}};
  const auto m = build_submdp(model, post_decision(a, {*a.at(1, 1)}, a.tasks_at(*a.at(1, 1))[0]), 1, never);
  const std::string dot = to_dot(m, a);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("n0 -> n1"), std::string::npos);
}

// Structure invariants over random builds; also run by the acceptance binary
// at a larger count.
TEST(SubMdp, RandomStructure) {
  fixtures::Rng rng(2024);
  for (int round = 0; round < 300; ++round) {
    const auto in = fixtures::random_instance(rng);
    const Model<PlainDynamics> model{in.arena, in.behaviors};
    const auto m = build_submdp(model, in.root, in.horizon, fixtures::Collision{});
    ASSERT_NO_THROW(m.topological_order());
    const std::uint32_t last = static_cast<std::uint32_t>(m.agent_count() - 1);
    for (StateIndex i = 0; i < m.size(); ++i) {
      const auto& s = m.state(i);
      ASSERT_LE(m.distance(i), m.bound());
      if (is_decision_state(s)) {
        ASSERT_GE(m.distance(i), m.first_decision_distance());
      }
      if (m.distance(i) == m.bound()) {
        ASSERT_TRUE(m.edges(i).empty());
      }
      if (m.kind(i) != NodeKind::Unsafe && m.distance(i) < m.bound()) {
        ASSERT_FALSE(m.edges(i).empty());
      }
      double total = 0;
      for (const auto& e : m.edges(i)) {
        total += e.probability;
        ASSERT_GT(e.target, i);
        const bool last_moves = m.kind(i) == NodeKind::Movement && s.turn == last;
        ASSERT_EQ(m.distance(e.target), m.distance(i) + (last_moves ? 1u : 0u));
      }
      if (m.kind(i) == NodeKind::AdversaryDecision || m.kind(i) == NodeKind::Movement) {
        ASSERT_NEAR(total, 1.0, 1e-9);
      }
    }
    EXPECT_EQ(m.size(), fixtures::count_states(in.arena, in.behaviors, fixtures::oracle_agents(in.root), 0, static_cast<int>(in.horizon), true));
  }
}
