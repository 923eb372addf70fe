#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "oshield/arena.hpp"
#include "oshield/errors.hpp"

using namespace oshield;

namespace {

const char* kMaze =
    ".....\n"
    ".###.\n"
    ".....\n"
    ".###.\n"
    ".....\n";

std::vector<std::string> path_ids(const Arena& a, TaskId t) {
  std::vector<std::string> out;
  for (LocationId v : a.task(t).path) out.push_back(a.node(v).id);
  return out;
}

}  // namespace

TEST(Arena, MazeDecisionLocations) {
  const Arena a = gridworld_from_ascii(kMaze);
  std::set<std::string> got;
  for (LocationId v : a.decision_locations()) got.insert(a.node(v).id);
  EXPECT_EQ(got, (std::set<std::string>{"1,1", "1,3", "1,5", "5,1", "5,3", "5,5"}));
  EXPECT_EQ(a.size(), 19u);
}

TEST(Arena, MazeTasksAtCrossing) {
  const Arena a = gridworld_from_ascii(kMaze);
  const LocationId v = *a.at(1, 3);
  const auto tasks = a.tasks_at(v);
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_EQ(path_ids(a, tasks[0]), (std::vector<std::string>{"1,3", "2,3", "3,3", "4,3", "5,3"}));
  EXPECT_EQ(path_ids(a, tasks[1]), (std::vector<std::string>{"1,3", "1,2", "1,1"}));
  EXPECT_EQ(path_ids(a, tasks[2]), (std::vector<std::string>{"1,3", "1,4", "1,5"}));
  EXPECT_EQ(a.describe_task(tasks[1]), "(1,3) . (1,2) . (1,1)");
}

TEST(Arena, InteriorTilesAreNotDecisions) {
  const Arena a = gridworld_from_ascii(kMaze);
  EXPECT_THROW(a.tasks_at(*a.at(2, 3)), NotADecisionLocation);
  for (TaskId t = 0; t < a.task_count(); ++t) {
    const auto& p = a.task(t).path;
    EXPECT_TRUE(a.is_decision_location(p.front()));
    EXPECT_TRUE(a.is_decision_location(p.back()));
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      EXPECT_FALSE(a.is_decision_location(p[i]));
      EXPECT_EQ(a.successors(p[i]).size(), 2u);
    }
    for (std::size_t i = 0; i + 1 < p.size(); ++i) EXPECT_TRUE(a.has_edge(p[i], p[i + 1]));
  }
}

TEST(Arena, Corridor) {
  const Arena a = gridworld_from_ascii("...");
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a.edges().size(), 4u);
  ASSERT_EQ(a.decision_locations().size(), 2u);
  for (LocationId v : a.decision_locations()) {
    ASSERT_EQ(a.tasks_at(v).size(), 1u);
    EXPECT_EQ(a.task(a.tasks_at(v)[0]).length(), 2u);
  }
}

TEST(Arena, SingleNodeWithoutDecisions) {
  ArenaDescription d;
  d.nodes.push_back({"a", {}, {}});
  const Arena a = build_arena(d);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_TRUE(a.decision_locations().empty());
}

TEST(Arena, BuildRejectsBadTasks) {
  ArenaDescription d;
  d.nodes = {{"a", {}, {}}, {"b", {}, {}}, {"c", {}, {}}};
  d.edges = {{"a", "b"}, {"b", "c"}, {"c", "b"}, {"b", "a"}};
  d.decision_locations = {"a", "c"};
  d.tasks = {{"a", {{"a", "b", "c"}}}, {"c", {{"c", "b"}}}};
  EXPECT_THROW(build_arena(d), InvalidArena);  // ends at b

  d.tasks = {{"a", {{"a", "c"}}}, {"c", {{"c", "b", "a"}}}};
  EXPECT_THROW(build_arena(d), InvalidArena);  // no edge a->c

  d.tasks = {{"a", {}}, {"c", {{"c", "b", "a"}}}};
  EXPECT_THROW(build_arena(d), InvalidArena);  // empty task set

  d.tasks = {{"a", {{"a", "b", "c"}}}, {"c", {{"c", "b", "a"}}}};
  EXPECT_NO_THROW(build_arena(d));
}

TEST(Arena, BadMaps) {
  EXPECT_THROW(gridworld_from_ascii("#"), InvalidMap);
  EXPECT_THROW(gridworld_from_ascii("..\n."), InvalidMap);
  EXPECT_THROW(gridworld_from_ascii(""), InvalidMap);
}

TEST(Arena, JsonRoundTrip) {
  const Arena a = gridworld_from_ascii(kMaze);
  const Arena b = load_arena(save_arena(a));
  EXPECT_TRUE(a == b);
  EXPECT_EQ(save_arena(b), save_arena(a));
}

TEST(Arena, JsonCorridorByHand) {
  const char* text = R"({
    "nodes": [{"id":"l","x":1,"y":1},{"id":"m","x":2,"y":1},{"id":"r","x":3,"y":1}],
    "edges": [["l","m"],["m","l"],["m","r"],["r","m"]],
    "decision_locations": ["l","r"],
    "tasks": {"l": [["l","m","r"]], "r": [["r","m","l"]]}
  })";
  const Arena a = load_arena(text);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a.edges().size(), 4u);
  EXPECT_TRUE(a == gridworld_from_ascii("...") || a.decision_locations().size() == 2u);
}

TEST(Arena, JsonErrors) {
  EXPECT_THROW(load_arena(R"({"nodes":[],"edges":[],"decision_locations":[]})"), ParseError);
  EXPECT_THROW(load_arena("{\n\"nodes\": [\n"), ParseError);
  try {
    load_arena(R"({"nodes":[],"edges":[],"decision_locations":[]})");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("tasks"), std::string::npos);
  }
}

TEST(Arena, Distances) {
  const Arena a = gridworld_from_ascii(kMaze);
  const DistanceTable dist(a);
  EXPECT_EQ(dist(*a.at(1, 1), *a.at(1, 1)), 0);
  EXPECT_EQ(dist(*a.at(1, 1), *a.at(5, 5)), 8);
  EXPECT_EQ(dist(*a.at(3, 1), *a.at(3, 5)), 8);
}
