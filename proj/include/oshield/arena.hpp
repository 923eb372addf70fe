#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace oshield {

using LocationId = std::uint32_t;
using TaskId = std::uint32_t;

inline constexpr TaskId kNoTask = std::numeric_limits<TaskId>::max();
inline constexpr LocationId kNoLocation = std::numeric_limits<LocationId>::max();

struct Location {
  std::string id;
  // Grid coordinates, 1-based, x = column and y = row. Absent for arenas that
  // were not derived from a grid map.
  std::optional<int> x;
  std::optional<int> y;

  bool operator==(const Location&) const = default;
};

/// A task as the sequence of visited locations v1 ... vn, n >= 2.
struct Task {
  std::vector<LocationId> path;

  std::size_t length() const { return path.size() - 1; }
  LocationId origin() const { return path.front(); }
  LocationId destination() const { return path.back(); }

  bool operator==(const Task&) const = default;
};

/// Raw description of an arena in terms of string node ids. This is what the
/// JSON format carries and what build_arena validates.
struct ArenaDescription {
  std::vector<Location> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> decision_locations;
  // Tasks per decision location, in a fixed order. Each task is the list of
  // visited node ids.
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> tasks;
};

/// The static environment: a directed graph of locations, the decision
/// locations and the tasks available at each of them. Immutable once built.
class Arena {
 public:
  Arena() = default;

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Location>& nodes() const { return nodes_; }
  const Location& node(LocationId v) const { return nodes_.at(v); }
  std::optional<LocationId> find(std::string_view id) const;
  std::optional<LocationId> at(int x, int y) const;

  const std::vector<std::pair<LocationId, LocationId>>& edges() const { return edges_; }
  bool has_edge(LocationId from, LocationId to) const;
  std::span<const LocationId> successors(LocationId v) const { return adjacency_.at(v); }

  bool is_decision_location(LocationId v) const { return v < is_decision_.size() && is_decision_[v]; }
  const std::vector<LocationId>& decision_locations() const { return decision_locations_; }

  /// Tasks available at a decision location, in their canonical order. Throws
  /// NotADecisionLocation otherwise.
  std::span<const TaskId> tasks_at(LocationId v) const;

  const Task& task(TaskId id) const { return tasks_.at(id); }
  std::size_t task_count() const { return tasks_.size(); }
  /// Position of a task within tasks_at(task.origin()).
  std::size_t local_index(TaskId id) const { return local_index_.at(id); }

  std::string describe(LocationId v) const;
  std::string describe_task(TaskId id) const;

  ArenaDescription description() const;

  /// Structural equality: same node ids and coordinates, edge set, decision
  /// set and per-location task lists.
  bool operator==(const Arena& other) const;

 private:
  friend Arena build_arena(const ArenaDescription& description);

  std::vector<Location> nodes_;
  std::unordered_map<std::string, LocationId> by_id_;
  std::map<std::pair<int, int>, LocationId> by_coordinate_;
  std::vector<std::pair<LocationId, LocationId>> edges_;
  std::vector<std::vector<LocationId>> adjacency_;
  std::vector<bool> is_decision_;
  std::vector<LocationId> decision_locations_;
  std::vector<Task> tasks_;
  std::vector<std::size_t> local_index_;
  std::vector<std::vector<TaskId>> tasks_at_;
};

/// Validates the description and builds the arena. Throws InvalidArena.
Arena build_arena(const ArenaDescription& description);

/// Builds an arena from a rectangular map of '.' corridor and '#' wall tiles.
/// Decision locations are corridor tiles with degree other than 2, plus corner
/// tiles. Throws InvalidMap.
Arena gridworld_from_ascii(std::string_view map_text);

std::span<const TaskId> tasks_at(const Arena& arena, LocationId v);

Arena load_arena(std::string_view json_text);
std::string save_arena(const Arena& arena);

/// Shortest-path distances (in edges) between all location pairs; -1 marks
/// unreachable pairs. Row-major, size() x size().
class DistanceTable {
 public:
  explicit DistanceTable(const Arena& arena);
  int operator()(LocationId from, LocationId to) const { return dist_[from * n_ + to]; }
  /// Longest finite distance.
  int diameter() const { return diameter_; }

 private:
  std::size_t n_ = 0;
  int diameter_ = 0;
  std::vector<int> dist_;
};

}  // namespace oshield
