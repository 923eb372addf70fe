#include "oshield/arena.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oshield/errors.hpp"

namespace oshield {

namespace {

std::string grid_id(int x, int y) { return std::to_string(x) + "," + std::to_string(y); }

}  // namespace

std::optional<LocationId> Arena::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<LocationId> Arena::at(int x, int y) const {
  auto it = by_coordinate_.find({x, y});
  if (it == by_coordinate_.end()) return std::nullopt;
  return it->second;
}

bool Arena::has_edge(LocationId from, LocationId to) const {
  if (from >= adjacency_.size()) return false;
  const auto& out = adjacency_[from];
  return std::find(out.begin(), out.end(), to) != out.end();
}

std::span<const TaskId> Arena::tasks_at(LocationId v) const {
  if (!is_decision_location(v)) {
    throw NotADecisionLocation("location " + (v < size() ? describe(v) : std::to_string(v)) +
                               " is not a decision location");
  }
  return tasks_at_[v];
}

std::string Arena::describe(LocationId v) const {
  const Location& loc = nodes_.at(v);
  if (loc.x && loc.y) return "(" + std::to_string(*loc.x) + "," + std::to_string(*loc.y) + ")";
  return loc.id;
}

std::string Arena::describe_task(TaskId id) const {
  std::string out;
  for (LocationId v : task(id).path) {
    if (!out.empty()) out += " . ";
    out += describe(v);
  }
  return out;
}

ArenaDescription Arena::description() const {
  ArenaDescription d;
  d.nodes = nodes_;
  for (auto [a, b] : edges_) d.edges.emplace_back(nodes_[a].id, nodes_[b].id);
  for (LocationId v : decision_locations_) {
    d.decision_locations.push_back(nodes_[v].id);
    std::vector<std::vector<std::string>> tasks;
    for (TaskId t : tasks_at_[v]) {
      std::vector<std::string> path;
      for (LocationId u : tasks_[t].path) path.push_back(nodes_[u].id);
      tasks.push_back(std::move(path));
    }
    d.tasks.emplace_back(nodes_[v].id, std::move(tasks));
  }
  return d;
}

bool Arena::operator==(const Arena& other) const {
  if (nodes_ != other.nodes_) return false;
  auto edge_set = [](const Arena& a) {
    return std::set<std::pair<LocationId, LocationId>>(a.edges_.begin(), a.edges_.end());
  };
  if (edge_set(*this) != edge_set(other)) return false;
  if (is_decision_ != other.is_decision_) return false;
  for (LocationId v : decision_locations_) {
    const auto& mine = tasks_at_[v];
    const auto& theirs = other.tasks_at_[v];
    if (mine.size() != theirs.size()) return false;
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (tasks_[mine[i]] != other.tasks_[theirs[i]]) return false;
    }
  }
  return true;
}

Arena build_arena(const ArenaDescription& description) {
  Arena arena;
  for (const Location& loc : description.nodes) {
    const auto id = static_cast<LocationId>(arena.nodes_.size());
    if (!arena.by_id_.emplace(loc.id, id).second) {
      throw InvalidArena("duplicate node id '" + loc.id + "'");
    }
    if (loc.x.has_value() != loc.y.has_value()) {
      throw InvalidArena("node '" + loc.id + "' has only one coordinate");
    }
    if (loc.x) arena.by_coordinate_.emplace(std::pair{*loc.x, *loc.y}, id);
    arena.nodes_.push_back(loc);
  }

  auto resolve = [&](const std::string& id, const char* what) {
    auto v = arena.find(id);
    if (!v) throw InvalidArena(std::string(what) + " references unknown node '" + id + "'");
    return *v;
  };

  arena.adjacency_.resize(arena.nodes_.size());
  std::set<std::pair<LocationId, LocationId>> seen_edges;
  for (const auto& [from, to] : description.edges) {
    const LocationId a = resolve(from, "edge");
    const LocationId b = resolve(to, "edge");
    if (!seen_edges.insert({a, b}).second) continue;
    arena.edges_.emplace_back(a, b);
    arena.adjacency_[a].push_back(b);
  }

  arena.is_decision_.assign(arena.nodes_.size(), false);
  for (const std::string& id : description.decision_locations) {
    const LocationId v = resolve(id, "decision location");
    if (arena.is_decision_[v]) throw InvalidArena("decision location '" + id + "' listed twice");
    arena.is_decision_[v] = true;
    arena.decision_locations_.push_back(v);
  }

  arena.tasks_at_.resize(arena.nodes_.size());
  std::vector<bool> has_entry(arena.nodes_.size(), false);
  for (const auto& [origin_id, tasks] : description.tasks) {
    const LocationId origin = resolve(origin_id, "task map");
    if (!arena.is_decision_[origin]) {
      throw InvalidArena("tasks given for non-decision location '" + origin_id + "'");
    }
    if (has_entry[origin]) throw InvalidArena("task list for '" + origin_id + "' given twice");
    has_entry[origin] = true;
    for (const auto& path_ids : tasks) {
      if (path_ids.size() < 2) {
        throw InvalidArena("task at '" + origin_id + "' must traverse at least one edge");
      }
      Task task;
      for (const std::string& id : path_ids) task.path.push_back(resolve(id, "task"));
      if (task.origin() != origin) {
        throw InvalidArena("task listed at '" + origin_id + "' starts at '" + path_ids.front() + "'");
      }
      for (std::size_t i = 0; i + 1 < task.path.size(); ++i) {
        if (!seen_edges.contains({task.path[i], task.path[i + 1]})) {
          throw InvalidArena("task at '" + origin_id + "' uses missing edge '" + path_ids[i] + "' -> '" +
                             path_ids[i + 1] + "'");
        }
      }
      if (!arena.is_decision_[task.destination()]) {
        throw InvalidArena("task at '" + origin_id + "' ends at non-decision location '" +
                           path_ids.back() + "'");
      }
      const auto id = static_cast<TaskId>(arena.tasks_.size());
      arena.local_index_.push_back(arena.tasks_at_[origin].size());
      arena.tasks_at_[origin].push_back(id);
      arena.tasks_.push_back(std::move(task));
    }
  }

  for (LocationId v : arena.decision_locations_) {
    if (arena.tasks_at_[v].empty()) {
      throw InvalidArena("decision location '" + arena.nodes_[v].id + "' has no tasks");
    }
  }
  return arena;
}

std::span<const TaskId> tasks_at(const Arena& arena, LocationId v) { return arena.tasks_at(v); }

Arena gridworld_from_ascii(std::string_view map_text) {
  std::vector<std::string> rows;
  {
    std::string line;
    std::istringstream in{std::string(map_text)};
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      rows.push_back(line);
    }
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
  }
  if (rows.empty()) throw InvalidMap("map is empty");
  const std::size_t width = rows.front().size();
  for (std::size_t y = 0; y < rows.size(); ++y) {
    if (rows[y].size() != width) {
      throw InvalidMap("map is not rectangular: row " + std::to_string(y + 1) + " has " +
                       std::to_string(rows[y].size()) + " columns, expected " + std::to_string(width));
    }
    for (std::size_t x = 0; x < width; ++x) {
      if (rows[y][x] != '.' && rows[y][x] != '#') {
        throw InvalidMap("unexpected character '" + std::string(1, rows[y][x]) + "' at row " +
                         std::to_string(y + 1) + ", column " + std::to_string(x + 1));
      }
    }
  }

  const int w = static_cast<int>(width);
  const int h = static_cast<int>(rows.size());
  auto corridor = [&](int x, int y) {
    return x >= 1 && y >= 1 && x <= w && y <= h && rows[y - 1][x - 1] == '.';
  };
  // Neighbor order: +x, -y, +y, -x.
  constexpr std::array<std::pair<int, int>, 4> kDirections{{{1, 0}, {0, -1}, {0, 1}, {-1, 0}}};

  ArenaDescription d;
  for (int y = 1; y <= h; ++y) {
    for (int x = 1; x <= w; ++x) {
      if (corridor(x, y)) d.nodes.push_back({grid_id(x, y), x, y});
    }
  }
  if (d.nodes.empty()) throw InvalidMap("map has no corridor tiles");

  auto neighbors = [&](int x, int y) {
    std::vector<std::pair<int, int>> out;
    for (auto [dx, dy] : kDirections) {
      if (corridor(x + dx, y + dy)) out.emplace_back(x + dx, y + dy);
    }
    return out;
  };
  auto is_decision = [&](int x, int y) {
    const auto n = neighbors(x, y);
    if (n.empty()) return false;
    if (n.size() != 2) return true;
    const bool collinear = n[0].first == n[1].first || n[0].second == n[1].second;
    return !collinear;
  };

  for (const Location& loc : d.nodes) {
    for (auto [nx, ny] : neighbors(*loc.x, *loc.y)) d.edges.emplace_back(loc.id, grid_id(nx, ny));
  }

  for (const Location& loc : d.nodes) {
    const int x = *loc.x;
    const int y = *loc.y;
    if (!is_decision(x, y)) continue;
    d.decision_locations.push_back(loc.id);
    std::vector<std::vector<std::string>> tasks;
    for (auto next : neighbors(x, y)) {
      std::vector<std::string> path{loc.id};
      std::pair<int, int> prev{x, y};
      std::pair<int, int> cur = next;
      path.push_back(grid_id(cur.first, cur.second));
      while (!is_decision(cur.first, cur.second)) {
        // Interior tiles are straight degree-2 tiles: continue away from prev.
        for (auto n : neighbors(cur.first, cur.second)) {
          if (n != prev) {
            prev = cur;
            cur = n;
            break;
          }
        }
        path.push_back(grid_id(cur.first, cur.second));
      }
      tasks.push_back(std::move(path));
    }
    d.tasks.emplace_back(loc.id, std::move(tasks));
  }
  return build_arena(d);
}

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void field_error(const std::string& message) { throw ParseError("arena JSON: " + message); }

const ordered_json& require(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) field_error(where + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

std::string as_string(const ordered_json& value, const std::string& where) {
  if (!value.is_string()) field_error(where + " must be a string");
  return value.get<std::string>();
}

std::string line_of(std::string_view text, std::size_t byte) {
  const std::size_t upto = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
  return std::to_string(line);
}

}  // namespace

Arena load_arena(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("arena JSON: syntax error at line " + line_of(json_text, e.byte) + ": " + e.what());
  }

  ArenaDescription d;
  const auto& nodes = require(doc, "nodes", "document");
  if (!nodes.is_array()) field_error("'nodes' must be an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    Location loc;
    loc.id = as_string(require(nodes[i], "id", where), where + ".id");
    if (nodes[i].contains("x") || nodes[i].contains("y")) {
      const auto& x = require(nodes[i], "x", where);
      const auto& y = require(nodes[i], "y", where);
      if (!x.is_number_integer() || !y.is_number_integer()) field_error(where + " coordinates must be integers");
      loc.x = x.get<int>();
      loc.y = y.get<int>();
    }
    d.nodes.push_back(std::move(loc));
  }

  const auto& edges = require(doc, "edges", "document");
  if (!edges.is_array()) field_error("'edges' must be an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!edges[i].is_array() || edges[i].size() != 2) field_error(where + " must be a pair of node ids");
    d.edges.emplace_back(as_string(edges[i][0], where), as_string(edges[i][1], where));
  }

  const auto& decisions = require(doc, "decision_locations", "document");
  if (!decisions.is_array()) field_error("'decision_locations' must be an array");
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    d.decision_locations.push_back(as_string(decisions[i], "decision_locations[" + std::to_string(i) + "]"));
  }

  const auto& tasks = require(doc, "tasks", "document");
  if (!tasks.is_object()) field_error("'tasks' must be an object");
  for (const auto& [origin, list] : tasks.items()) {
    const std::string where = "tasks." + origin;
    if (!list.is_array()) field_error(where + " must be an array of paths");
    std::vector<std::vector<std::string>> paths;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string pwhere = where + "[" + std::to_string(i) + "]";
      if (!list[i].is_array()) field_error(pwhere + " must be an array of node ids");
      std::vector<std::string> path;
      for (const auto& id : list[i]) path.push_back(as_string(id, pwhere));
      paths.push_back(std::move(path));
    }
    d.tasks.emplace_back(origin, std::move(paths));
  }

  try {
    return build_arena(d);
  } catch (const InvalidArena& e) {
    throw ParseError(std::string("arena JSON: invalid arena: ") + e.what());
  }
}

std::string save_arena(const Arena& arena) {
  const ArenaDescription d = arena.description();
  ordered_json doc;
  doc["nodes"] = ordered_json::array();
  for (const Location& loc : d.nodes) {
    ordered_json node;
    node["id"] = loc.id;
    if (loc.x) {
      node["x"] = *loc.x;
      node["y"] = *loc.y;
    }
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& [a, b] : d.edges) doc["edges"].push_back({a, b});
  doc["decision_locations"] = d.decision_locations;
  doc["tasks"] = ordered_json::object();
  for (const auto& [origin, paths] : d.tasks) doc["tasks"][origin] = paths;
  return doc.dump(2);
}

DistanceTable::DistanceTable(const Arena& arena) : n_(arena.size()), dist_(n_ * n_, -1) {
  std::deque<LocationId> frontier;
  for (LocationId src = 0; src < n_; ++src) {
    int* row = dist_.data() + src * n_;
    row[src] = 0;
    frontier.assign(1, src);
    while (!frontier.empty()) {
      const LocationId v = frontier.front();
      frontier.pop_front();
      for (LocationId u : arena.successors(v)) {
        if (row[u] < 0) {
          row[u] = row[v] + 1;
          frontier.push_back(u);
        }
      }
    }
  }
  for (int d : dist_) diameter_ = std::max(diameter_, d);
}

}  // namespace oshield
