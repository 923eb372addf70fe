#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oshield/errors.hpp"
#include "oshield/shield.hpp"
#include "oshield/snake.hpp"

using namespace oshield;

namespace {

const char* kMaze = "A....\n.###.\n.....\n.###.\n....E\n";

std::vector<LocationId> cells(const std::deque<LocationId>& d) { return {d.begin(), d.end()}; }

SnakeState two_snakes(std::vector<LocationId> avatar, std::vector<LocationId> adversary) {
  SnakeState s;
  s.positions = {avatar.front(), adversary.front()};
  s.queues = {TaskCursor{}, TaskCursor{}};
  s.payload.bodies[0] = SnakeBody(avatar);
  s.payload.bodies[1] = SnakeBody(adversary);
  return s;
}

// Picks uniformly among the avatar's tasks; plays until the game ends.
template <class OnEvent>
void play_randomly(SnakeGame& g, Rng& rng, OnEvent&& on_event) {
  while (g.running()) {
    if (g.awaiting_avatar()) {
      const auto tasks = g.avatar_tasks();
      const TaskId t = tasks[std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng)];
      on_event(g.choose(t));
    } else {
      on_event(g.step());
    }
  }
}

}  // namespace

TEST(Snake, BodyRingBuffer) {
  SnakeBody b({5, 4, 3});
  EXPECT_EQ(b.head(), 5u);
  EXPECT_EQ(b.tail(), 3u);
  b.push_front(6);
  b.pop_back();
  EXPECT_EQ(b.cells(), (std::vector<LocationId>{6, 5, 4}));
  EXPECT_TRUE(b.contains(4));
  EXPECT_FALSE(b.contains(6, 1));
  EXPECT_TRUE(b == SnakeBody({6, 5, 4}));
  EXPECT_FALSE(b == SnakeBody({6, 5}));
  SnakeBody full;
  for (LocationId v = 0; v < SnakeBody::kCapacity; ++v) full.push_front(v);
  EXPECT_THROW(full.push_front(99), std::length_error);
}

TEST(Snake, MapParsing) {
  const SnakeMap m = parse_snake_map(kMaze);
  EXPECT_EQ(m.arena->size(), 19u);
  EXPECT_EQ(m.avatar_spawn, *m.arena->at(1, 1));
  EXPECT_EQ(m.adversary_spawn, *m.arena->at(5, 5));
  EXPECT_EQ(m.width, 5);
  EXPECT_EQ(m.height, 5);
  EXPECT_THROW(parse_snake_map(".....\n.###.\n....E\n"), InvalidMap);
  EXPECT_THROW(parse_snake_map(".A...\n.###.\n....E\n"), InvalidMap);
  EXPECT_THROW(parse_snake_map("A.A..\n.###.\n....E\n"), InvalidMap);
}

TEST(Snake, NewGameOnMaze) {
  const SnakeMap m = parse_snake_map(kMaze);
  const SnakeGame g = SnakeGame::create(m, 42);
  ASSERT_EQ(g.apples(0).size(), 5u);
  ASSERT_EQ(g.apples(1).size(), 5u);
  std::set<LocationId> used(g.body(0).begin(), g.body(0).end());
  used.insert(g.body(1).begin(), g.body(1).end());
  EXPECT_EQ(used.size(), 8u);
  for (std::size_t a = 0; a < 2; ++a) {
    for (LocationId v : g.apples(a)) EXPECT_TRUE(used.insert(v).second);
  }
  for (std::size_t a = 0; a < 2; ++a) {
    const auto& body = g.body(a);
    for (std::size_t i = 0; i + 1 < body.size(); ++i) EXPECT_TRUE(m.arena->has_edge(body[i], body[i + 1]));
  }
  EXPECT_TRUE(g.awaiting_avatar());
  EXPECT_TRUE(is_decision_state(to_shield_state(g)));
}

TEST(Snake, SameSeedSameGame) {
  const SnakeMap m = parse_snake_map(kMaze);
  auto run = [&](std::uint64_t seed) {
    SnakeGame g = SnakeGame::create(m, seed);
    Rng rng(seed);
    std::vector<std::vector<LocationId>> trace;
    play_randomly(g, rng, [&](const SnakeEvent&) { trace.push_back(cells(g.body(1))); });
    return std::make_pair(g.initial_apples(0), trace);
  };
  EXPECT_EQ(run(42), run(42));
  EXPECT_NE(run(42).first, run(43).first);
}

TEST(Snake, TooSmall) {
  EXPECT_THROW(SnakeGame::create(parse_snake_map("A.E"), 1), ArenaTooSmall);
  SnakeConfig c;
  c.apples_per_player = 0;
  c.initial_length = 2;
  EXPECT_THROW(SnakeGame::create(parse_snake_map("A.E"), 1, c), ArenaTooSmall);
}

TEST(Snake, UnsafePredicate) {
  const SnakeCollision unsafe;
  EXPECT_TRUE(unsafe(two_snakes({1, 2, 3}, {1, 7, 8})));   // heads meet
  EXPECT_TRUE(unsafe(two_snakes({8, 2, 3}, {6, 7, 8})));   // avatar head on tail
  EXPECT_FALSE(unsafe(two_snakes({1, 2, 3}, {6, 7, 8})));  // apart
  EXPECT_FALSE(unsafe(two_snakes({1, 2, 3}, {3, 7, 8})));  // adversary head on avatar tail
}

TEST(Snake, RewardsAndWin) {
  const SnakeMap m = parse_snake_map("A....\n.###.\n.....\n.###.\n....E\n");
  const Arena& a = *m.arena;
  SnakeConfig c;
  c.initial_length = 3;
  // The avatar's body lies along the top row; its apples are down the left.
  c.apples = std::array<std::vector<LocationId>, 2>{std::vector<LocationId>{*a.at(1, 2), *a.at(1, 3)},
                                                    std::vector<LocationId>{*a.at(3, 3)}};
  SnakeGame g = SnakeGame::create(m, 5, c);
  ASSERT_EQ(cells(g.body(0)), (std::vector<LocationId>{*a.at(1, 1), *a.at(2, 1), *a.at(3, 1)}));
  const auto tasks = g.avatar_tasks();
  ASSERT_EQ(tasks.size(), 1u);  // going right would reverse into the neck
  g.choose(tasks[0]);
  const SnakeEvent first = g.step();
  EXPECT_TRUE(first.moved && first.ate);
  EXPECT_EQ(first.reward, 10.0);
  EXPECT_EQ(g.body(0).size(), 4u);
  const SnakeEvent decide = g.step();
  EXPECT_NE(decide.decided, kNoTask);
  EXPECT_EQ(g.step().reward, 0.0);  // adversary move
  const SnakeEvent last = g.step();
  EXPECT_EQ(last.reward, 60.0);
  EXPECT_EQ(g.status(), SnakeStatus::AvatarWon);
  EXPECT_EQ(g.cause(), EndCause::AvatarCleared);
  EXPECT_EQ(g.score(0), 2);
  EXPECT_THROW(to_shield_state(g), GameOver);
  EXPECT_THROW(g.step(), GameOver);
}

TEST(Snake, ShieldStateMidCorridor) {
  SnakeGame g = SnakeGame::create(parse_snake_map(kMaze), 3);
  g.choose(g.avatar_tasks()[0]);
  g.step();
  const SnakeState s = to_shield_state(g);
  EXPECT_FALSE(s.queues[0].empty());
  EXPECT_EQ(s.turn, 1u);
  EXPECT_FALSE(is_decision_state(s));
}

// Replaying the game's events through the MDP transition functions gives the
// same payload as the game's own bookkeeping.
TEST(Snake, PayloadReplay) {
  const SnakeMap m = parse_snake_map(
      "A...........\n.###.##.###.\n............\n.#.###.###..\n...........E\n");
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    SnakeGame g = SnakeGame::create(m, seed);
    SnakeState s = to_shield_state(g);
    Rng rng(seed * 7);
    std::size_t checked = 0;
    play_randomly(g, rng, [&](const SnakeEvent& e) {
      const std::size_t before = s.payload.bodies[e.agent].size();
      if (e.moved) {
        s = apply_move(g.model(), s);
        if (g.running()) {
          EXPECT_EQ(s.payload.bodies[e.agent].size(), before + (e.ate ? 1 : 0));
        }
      } else {
        s = with_task<SnakeDynamics>(s, e.agent, e.decided);
      }
      if (g.running()) {
        ASSERT_EQ(s, to_shield_state(g)) << "seed " << seed << " tick " << g.tick();
        ++checked;
      }
    });
    EXPECT_GT(checked, 0u);
  }
}

TEST(Snake, NoReversal) {
  const SnakeMap m = parse_snake_map(kMaze);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SnakeGame g = SnakeGame::create(m, seed);
    Rng rng(seed);
    play_randomly(g, rng, [&](const SnakeEvent& e) {
      if (e.decided != kNoTask && g.body(e.agent).size() >= 2) {
        const LocationId neck = g.body(e.agent)[1];
        const auto all = g.arena().tasks_at(g.body(e.agent)[0]);
        const bool other_option = std::any_of(all.begin(), all.end(), [&](TaskId t) {
          return g.arena().task(t).path[1] != neck;
        });
        if (other_option) {
          EXPECT_NE(g.arena().task(e.decided).path[1], neck);
        }
      }
    });
  }
}

TEST(Snake, AppleSeekingBehavior) {
  const SnakeMap m = parse_snake_map(kMaze);
  const Arena& a = *m.arena;
  const DistanceTable dist(a);
  const auto b = apple_seeking_behavior(a, dist, {*a.at(5, 3)});
  const LocationId v = *a.at(1, 3);
  const auto p = b.probabilities(v);  // +x, -y, +y
  EXPECT_DOUBLE_EQ(p[0], 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(p[1], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(p[2], 1.0 / 6.0);
  const auto none = apple_seeking_behavior(a, dist, {});
  EXPECT_DOUBLE_EQ(none.probabilities(v)[0], 1.0 / 3.0);
}

TEST(Snake, ShieldOnGameStates) {
  const SnakeMap m = parse_snake_map(kMaze);
  SnakeGame g = SnakeGame::create(m, 9);
  const auto model = g.model();
  const auto root = to_shield_state(g);
  const auto analysis = analyze(model, root, 4, SnakeCollision{});
  EXPECT_EQ(analysis.submdp.first_decision_distance(), 0u);
  const auto tasks = g.avatar_tasks();
  EXPECT_EQ(analysis.valuation.tasks, tasks);
  for (double v : analysis.valuation.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
