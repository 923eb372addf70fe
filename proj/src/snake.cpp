#include "oshield/snake.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "oshield/errors.hpp"

namespace oshield {

SnakeBody::SnakeBody(const std::vector<LocationId>& cells) {
  for (auto it = cells.rbegin(); it != cells.rend(); ++it) push_front(*it);
}

void SnakeBody::push_front(LocationId v) {
  if (len_ == kCapacity) throw std::length_error("snake body exceeds " + std::to_string(kCapacity) + " cells");
  start_ = static_cast<std::uint8_t>((start_ + kCapacity - 1) % kCapacity);
  ring_[start_] = static_cast<std::uint16_t>(v);
  ++len_;
}

std::vector<LocationId> SnakeBody::cells() const {
  std::vector<LocationId> out(len_);
  for (std::size_t i = 0; i < len_; ++i) out[i] = (*this)[i];
  return out;
}

std::size_t SnakeBody::hash() const {
  std::size_t h = len_;
  for (std::size_t i = 0; i < len_; ++i) h = hash_mix(h, (*this)[i]);
  return h;
}

bool SnakeBody::operator==(const SnakeBody& other) const {
  if (len_ != other.len_) return false;
  for (std::size_t i = 0; i < len_; ++i) {
    if ((*this)[i] != other[i]) return false;
  }
  return true;
}

void SnakeDynamics::on_move(Payload& p, std::size_t agent, LocationId, LocationId to) const {
  SnakeBody& body = p.bodies[agent];
  body.push_front(to);
  if (layout) {
    const auto& list = layout->apples[agent];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if ((p.apples[agent] >> i & 1u) && list[i] == to) {
        p.apples[agent] &= ~(1u << i);
        return;  // grows: keep the tail
      }
    }
  }
  body.pop_back();
}

bool SnakeDynamics::task_enabled(const Arena& arena, const GlobalState<Payload>& s, std::size_t agent,
                                 TaskId task) const {
  const SnakeBody& body = s.payload.bodies[agent];
  return body.size() < 2 || arena.task(task).path[1] != body[1];
}

std::size_t SnakeDynamics::hash(const Payload& p) const {
  return hash_mix(hash_mix(p.bodies[0].hash(), p.bodies[1].hash()),
                  (static_cast<std::size_t>(p.apples[0]) << 32) | p.apples[1]);
}

SnakeMap parse_snake_map(std::string_view text) {
  std::string plain(text);
  int row = 1;
  int col = 1;
  std::optional<std::pair<int, int>> avatar, adversary;
  int width = 0;
  for (char& c : plain) {
    if (c == '\n') {
      width = std::max(width, col - 1);
      ++row;
      col = 1;
      continue;
    }
    if (c == 'A' || c == 'E') {
      auto& slot = c == 'A' ? avatar : adversary;
      if (slot) throw InvalidMap(std::string("spawn marker '") + c + "' appears more than once");
      slot = std::make_pair(col, row);
      c = '.';
    }
    if (c != '\r') ++col;
  }
  width = std::max(width, col - 1);
  if (!avatar) throw InvalidMap("map has no avatar spawn 'A'");
  if (!adversary) throw InvalidMap("map has no adversary spawn 'E'");

  SnakeMap map;
  auto arena = std::make_shared<Arena>(gridworld_from_ascii(plain));
  auto spawn = [&](std::pair<int, int> at, const char* who) {
    const auto v = arena->at(at.first, at.second);
    if (!v || !arena->is_decision_location(*v)) {
      throw InvalidMap(std::string(who) + " spawn (" + std::to_string(at.first) + "," + std::to_string(at.second) +
                       ") is not a decision location");
    }
    return *v;
  };
  map.avatar_spawn = spawn(*avatar, "avatar");
  map.adversary_spawn = spawn(*adversary, "adversary");
  int height = 0;
  for (const auto& loc : arena->nodes()) height = std::max(height, *loc.y);
  map.width = width;
  map.height = std::max(height, row - (plain.empty() || plain.back() == '\n' ? 1 : 0));
  map.arena = std::move(arena);
  return map;
}

SnakeMap load_snake_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_snake_map(text.str());
}

std::string_view to_string(SnakeStatus status) {
  switch (status) {
    case SnakeStatus::Running: return "running";
    case SnakeStatus::AvatarWon: return "avatar_won";
    case SnakeStatus::AdversaryWon: return "adversary_won";
    case SnakeStatus::Draw: return "draw";
  }
  return "?";
}

std::string_view to_string(EndCause cause) {
  switch (cause) {
    case EndCause::None: return "none";
    case EndCause::AvatarCleared: return "avatar_cleared";
    case EndCause::AdversaryCleared: return "adversary_cleared";
    case EndCause::Collision: return "collision";
    case EndCause::AvatarSelfCollision: return "avatar_self_collision";
    case EndCause::AdversaryCrashed: return "adversary_crashed";
    case EndCause::TickLimit: return "tick_limit";
  }
  return "?";
}

AdversaryBehavior apple_seeking_behavior(const Arena& arena, const DistanceTable& distances,
                                         const std::vector<LocationId>& targets) {
  if (targets.empty()) return uniform_behavior(arena);
  std::map<LocationId, std::vector<double>> weights;
  for (LocationId v : arena.decision_locations()) {
    const auto tasks = arena.tasks_at(v);
    std::vector<int> dist;
    for (TaskId t : tasks) {
      int best = std::numeric_limits<int>::max();
      for (LocationId a : targets) {
        const int d = distances(arena.task(t).path[1], a);
        if (d >= 0) best = std::min(best, d);
      }
      dist.push_back(best);
    }
    const int closest = *std::min_element(dist.begin(), dist.end());
    std::vector<double> w;
    for (int d : dist) w.push_back(d == closest ? 4.0 : 1.0);
    weights.emplace(v, std::move(w));
  }
  return weighted_behavior(arena, weights);
}

namespace {

// Lays out a body of `length` cells from `head`, walking away from it and
// preferring to keep going straight. Depth-first with backtracking.
bool lay_body(const Arena& arena, std::vector<LocationId>& body, std::size_t length,
              const std::vector<LocationId>& blocked) {
  if (body.size() == length) return true;
  const LocationId cur = body.back();
  std::vector<LocationId> options(arena.successors(cur).begin(), arena.successors(cur).end());
  if (body.size() >= 2) {
    const auto& a = arena.node(body[body.size() - 2]);
    const auto& b = arena.node(cur);
    std::stable_partition(options.begin(), options.end(), [&](LocationId n) {
      const auto& c = arena.node(n);
      return *c.x - *b.x == *b.x - *a.x && *c.y - *b.y == *b.y - *a.y;
    });
  }
  for (LocationId n : options) {
    if (std::find(body.begin(), body.end(), n) != body.end()) continue;
    if (std::find(blocked.begin(), blocked.end(), n) != blocked.end()) continue;
    body.push_back(n);
    if (lay_body(arena, body, length, blocked)) return true;
    body.pop_back();
  }
  return false;
}

}  // namespace

SnakeGame SnakeGame::create(const SnakeMap& map, std::uint64_t seed, SnakeConfig config) {
  const Arena& arena = *map.arena;
  if (config.apples_per_player < 0 || config.apples_per_player > 32) {
    throw std::invalid_argument("apples_per_player must lie in 0..32");
  }
  if (config.initial_length < 2) throw std::invalid_argument("initial_length must be at least 2");
  if (arena.size() > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("arena too large");
  const std::size_t length = static_cast<std::size_t>(config.initial_length);
  const std::size_t apples = static_cast<std::size_t>(config.apples_per_player);
  if (length + apples > SnakeBody::kCapacity) throw std::invalid_argument("snake could outgrow its body buffer");
  if (arena.size() < 2 * apples + 2 * length) {
    throw ArenaTooSmall("arena has " + std::to_string(arena.size()) + " corridor tiles, need " +
                        std::to_string(2 * apples + 2 * length));
  }

  SnakeGame g;
  g.map_ = map;
  g.config_ = config;
  g.rng_.seed(seed);
  g.distances_ = std::make_shared<DistanceTable>(arena);

  std::vector<LocationId> avatar{map.avatar_spawn};
  std::vector<LocationId> adversary{map.adversary_spawn};
  if (!lay_body(arena, avatar, length, {map.adversary_spawn}) || !lay_body(arena, adversary, length, avatar)) {
    throw ArenaTooSmall("no room to place both snakes with length " + std::to_string(length));
  }
  g.bodies_[0].assign(avatar.begin(), avatar.end());
  g.bodies_[1].assign(adversary.begin(), adversary.end());

  auto layout = std::make_shared<AppleLayout>();
  if (config.apples) {
    for (std::size_t a = 0; a < 2; ++a) {
      for (LocationId v : (*config.apples)[a]) {
        if (v >= arena.size()) throw std::invalid_argument("apple location out of range");
      }
    }
    layout->apples = *config.apples;
    if (layout->apples[0].size() > 32 || layout->apples[1].size() > 32) {
      throw std::invalid_argument("at most 32 apples per player");
    }
  } else {
    std::vector<LocationId> free;
    for (LocationId v = 0; v < arena.size(); ++v) {
      if (std::find(avatar.begin(), avatar.end(), v) == avatar.end() &&
          std::find(adversary.begin(), adversary.end(), v) == adversary.end()) {
        free.push_back(v);
      }
    }
    if (free.size() < 2 * apples) throw ArenaTooSmall("not enough free tiles for the apples");
    // Partial Fisher-Yates: the first 2 * apples entries become the apples.
    for (std::size_t i = 0; i < 2 * apples; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
      std::swap(free[i], free[pick(g.rng_)]);
    }
    layout->apples[0].assign(free.begin(), free.begin() + static_cast<std::ptrdiff_t>(apples));
    layout->apples[1].assign(free.begin() + static_cast<std::ptrdiff_t>(apples),
                             free.begin() + static_cast<std::ptrdiff_t>(2 * apples));
  }
  g.layout_ = std::move(layout);
  g.eaten_[0].assign(g.layout_->apples[0].size(), false);
  g.eaten_[1].assign(g.layout_->apples[1].size(), false);
  g.behaviors_.resize(1);
  g.refresh_behavior();
  return g;
}

void SnakeGame::refresh_behavior() {
  behaviors_[0] = config_.adversary_behavior ? *config_.adversary_behavior
                                              : apple_seeking_behavior(arena(), *distances_, apples(1));
}

std::vector<LocationId> SnakeGame::apples(std::size_t agent) const {
  std::vector<LocationId> out;
  const auto& list = layout_->apples.at(agent);
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!eaten_[agent][i]) out.push_back(list[i]);
  }
  return out;
}

bool SnakeGame::awaiting_avatar() const { return running() && turn_ == 0 && queues_[0].empty(); }

std::vector<TaskId> SnakeGame::avatar_tasks() const {
  if (!awaiting_avatar()) return {};
  return enabled_tasks(model(), shield_state(), 0);
}

SnakeEvent SnakeGame::choose(TaskId task) {
  const auto tasks = avatar_tasks();
  if (std::find(tasks.begin(), tasks.end(), task) == tasks.end()) {
    throw ActionNotEnabled("task " + std::to_string(task) + " cannot be chosen now");
  }
  queues_[0] = TaskCursor{task, 0};
  SnakeEvent e;
  e.agent = 0;
  e.decided = task;
  return e;
}

SnakeEvent SnakeGame::step() {
  if (!running()) throw GameOver("the game has ended");
  if (awaiting_avatar()) throw std::logic_error("waiting for the avatar to choose a task");
  if (turn_ == 1 && queues_[1].empty()) {
    const auto outcomes = adversary_outcomes(model(), shield_state(), 1);
    std::vector<double> w;
    for (const Outcome& o : outcomes) w.push_back(o.probability);
    const TaskId t = outcomes[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng_)].task;
    queues_[1] = TaskCursor{t, 0};
    SnakeEvent e;
    e.agent = 1;
    e.decided = t;
    return e;
  }
  return move(turn_);
}

void SnakeGame::finish(SnakeStatus status, EndCause cause) {
  status_ = status;
  cause_ = cause;
}

SnakeEvent SnakeGame::move(std::size_t agent) {
  SnakeEvent e;
  e.agent = agent;
  e.moved = true;
  const std::size_t other = 1 - agent;
  TaskCursor& q = queues_[agent];
  const Task& task = arena().task(q.task);
  const LocationId to = task.path[q.step + 1u];
  if (++q.step == task.length()) q = TaskCursor{};
  turn_ = (turn_ + 1) % 2;
  ++tick_;

  auto& mine = bodies_[agent];
  const auto& list = layout_->apples[agent];
  std::optional<std::size_t> apple;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!eaten_[agent][i] && list[i] == to) apple = i;
  }
  mine.push_front(to);
  if (!apple) mine.pop_back();

  const auto& theirs = bodies_[other];
  const bool self_hit = std::find(mine.begin() + 1, mine.end(), to) != mine.end();
  const bool other_hit = std::find(theirs.begin(), theirs.end(), to) != theirs.end();
  // Heads meeting count against the avatar whoever moved last.
  std::optional<std::pair<SnakeStatus, EndCause>> end;
  if (agent == 0 && other_hit) end = {SnakeStatus::AdversaryWon, EndCause::Collision};
  else if (agent == 0 && self_hit) end = {SnakeStatus::AdversaryWon, EndCause::AvatarSelfCollision};
  else if (agent == 1 && to == theirs.front()) end = {SnakeStatus::AdversaryWon, EndCause::Collision};
  else if (agent == 1 && (other_hit || self_hit)) end = {SnakeStatus::AvatarWon, EndCause::AdversaryCrashed};
  if (end) {
    finish(end->first, end->second);
    return e;
  }

  if (apple) {
    eaten_[agent][*apple] = true;
    ++scores_[agent];
    e.ate = true;
    if (agent == 0) e.reward += 10.0;
    const bool cleared = std::all_of(eaten_[agent].begin(), eaten_[agent].end(), [](bool b) { return b; });
    if (cleared) {
      if (agent == 0) {
        e.reward += 50.0;
        finish(SnakeStatus::AvatarWon, EndCause::AvatarCleared);
      } else {
        finish(SnakeStatus::AdversaryWon, EndCause::AdversaryCleared);
      }
      return e;
    }
    if (agent == 1) refresh_behavior();
  }
  if (tick_ >= config_.max_ticks) finish(SnakeStatus::Draw, EndCause::TickLimit);
  return e;
}

SnakeState SnakeGame::shield_state() const {
  if (!running()) throw GameOver("the game has ended");
  SnakeState s;
  s.positions = {bodies_[0].front(), bodies_[1].front()};
  s.queues = {queues_[0], queues_[1]};
  s.turn = turn_;
  for (std::size_t a = 0; a < 2; ++a) {
    s.payload.bodies[a] = SnakeBody(std::vector<LocationId>(bodies_[a].begin(), bodies_[a].end()));
    for (std::size_t i = 0; i < eaten_[a].size(); ++i) {
      if (!eaten_[a][i]) s.payload.apples[a] |= 1u << i;
    }
  }
  return s;
}

SnakeState to_shield_state(const SnakeGame& game) { return game.shield_state(); }

}  // namespace oshield
