#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oshield/arena.hpp"
#include "oshield/behavior.hpp"
#include "oshield/mdp.hpp"

namespace oshield {

/// Snake body as a fixed-capacity ring buffer, head first. Used inside the
/// MDP payload, so it must be cheap to copy and compare.
class SnakeBody {
 public:
  static constexpr std::size_t kCapacity = 64;

  SnakeBody() = default;
  explicit SnakeBody(const std::vector<LocationId>& cells);

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }
  LocationId operator[](std::size_t i) const { return ring_[(start_ + i) % kCapacity]; }
  LocationId head() const { return (*this)[0]; }
  LocationId tail() const { return (*this)[len_ - 1]; }

  /// Throws std::length_error past kCapacity.
  void push_front(LocationId v);
  void pop_back() { --len_; }

  /// Whether v is one of the cells [from, size()).
  bool contains(LocationId v, std::size_t from = 0) const {
    for (std::size_t i = from; i < len_; ++i) {
      if ((*this)[i] == v) return true;
    }
    return false;
  }

  std::vector<LocationId> cells() const;
  std::size_t hash() const;

  bool operator==(const SnakeBody& other) const;

 private:
  std::array<std::uint16_t, kCapacity> ring_{};
  std::uint8_t start_ = 0;
  std::uint8_t len_ = 0;
};

/// Environment part of a snake MDP state: both bodies and, per player, a bit
/// mask of the apples that are still on the board (bit i = apple i of the
/// initial list).
struct SnakePayload {
  std::array<SnakeBody, 2> bodies;
  std::array<std::uint32_t, 2> apples{};

  bool operator==(const SnakePayload&) const = default;
};

struct AppleLayout {
  std::array<std::vector<LocationId>, 2> apples;  // initial apples per player
};

/// Deterministic payload update for snakes: the mover's head advances, it
/// grows by one on its own apple and otherwise drops its tail. A snake may not
/// turn back into its own neck.
struct SnakeDynamics {
  using Payload = SnakePayload;

  std::shared_ptr<const AppleLayout> layout;

  void on_move(Payload& p, std::size_t agent, LocationId from, LocationId to) const;
  bool task_enabled(const Arena& arena, const GlobalState<Payload>& s, std::size_t agent, TaskId task) const;
  std::size_t hash(const Payload& p) const;
};

using SnakeState = GlobalState<SnakePayload>;

/// The avatar's head lies on the adversary's body, head included.
struct SnakeCollision {
  bool operator()(const SnakeState& s) const { return s.payload.bodies[1].contains(s.payload.bodies[0].head()); }
};

/// Arena plus spawn points, parsed from the ASCII format with 'A' marking the
/// avatar head and 'E' the adversary head.
struct SnakeMap {
  std::shared_ptr<const Arena> arena;
  LocationId avatar_spawn = kNoLocation;
  LocationId adversary_spawn = kNoLocation;
  int width = 0;
  int height = 0;
};

/// Throws InvalidMap when a marker is missing, repeated or not on a decision
/// location.
SnakeMap parse_snake_map(std::string_view text);
SnakeMap load_snake_map(const std::string& path);

enum class SnakeStatus { Running, AvatarWon, AdversaryWon, Draw };
std::string_view to_string(SnakeStatus status);

enum class EndCause {
  None,
  AvatarCleared,      // avatar ate all its apples
  AdversaryCleared,   // adversary ate all its apples
  Collision,          // avatar head on the adversary body, or heads met
  AvatarSelfCollision,
  AdversaryCrashed,   // adversary ran into the avatar or itself
  TickLimit,
};
std::string_view to_string(EndCause cause);

struct SnakeConfig {
  int apples_per_player = 5;
  int initial_length = 4;
  long max_ticks = 2000;
  // Fixed adversary behavior; when absent the adversary prefers corridors
  // that lead towards its nearest apple (weight 4 against 1).
  std::optional<AdversaryBehavior> adversary_behavior;
  // Fixed apple tiles per player instead of random placement.
  std::optional<std::array<std::vector<LocationId>, 2>> apples;
};

/// One event of the game: a decision or a single move.
struct SnakeEvent {
  std::size_t agent = 0;
  bool moved = false;
  TaskId decided = kNoTask;  // task chosen by this event, if a decision
  bool ate = false;
  double reward = 0.0;       // avatar reward: +10 per own apple, +50 on a win
};

/// Two-player snake. Events alternate like the MDP: when it is an agent's
/// turn and its queue is empty it first decides (the avatar via choose(), the
/// adversary by sampling its behavior), then moves one edge per step().
class SnakeGame {
 public:
  /// Reproducible from the seed. Throws ArenaTooSmall.
  static SnakeGame create(const SnakeMap& map, std::uint64_t seed, SnakeConfig config = {});

  const Arena& arena() const { return *map_.arena; }
  const SnakeMap& map() const { return map_; }
  const SnakeConfig& config() const { return config_; }

  SnakeStatus status() const { return status_; }
  EndCause cause() const { return cause_; }
  bool running() const { return status_ == SnakeStatus::Running; }
  long tick() const { return tick_; }
  std::uint32_t turn() const { return turn_; }

  const std::deque<LocationId>& body(std::size_t agent) const { return bodies_.at(agent); }
  std::vector<LocationId> apples(std::size_t agent) const;
  const std::vector<LocationId>& initial_apples(std::size_t agent) const { return layout_->apples.at(agent); }
  int score(std::size_t agent) const { return scores_.at(agent); }
  const DistanceTable& distances() const { return *distances_; }
  TaskCursor queue(std::size_t agent) const { return queues_.at(agent); }

  /// Running, avatar to move, nothing queued.
  bool awaiting_avatar() const;
  /// Tasks the avatar may pick now (no reversal into its neck).
  std::vector<TaskId> avatar_tasks() const;
  /// Throws ActionNotEnabled when the task is not available or no avatar
  /// decision is pending.
  SnakeEvent choose(TaskId task);
  /// Next adversary decision or move. Throws std::logic_error while an
  /// avatar decision is pending, GameOver when the game has ended.
  SnakeEvent step();

  const AdversaryBehavior& adversary_behavior() const { return behaviors_[0]; }
  std::span<const AdversaryBehavior> behaviors() const { return behaviors_; }
  SnakeDynamics dynamics() const { return SnakeDynamics{layout_}; }
  Model<SnakeDynamics> model() const { return Model<SnakeDynamics>{arena(), behaviors(), dynamics()}; }

  /// Throws GameOver.
  SnakeState shield_state() const;

 private:
  SnakeGame() = default;
  void refresh_behavior();
  SnakeEvent move(std::size_t agent);
  void finish(SnakeStatus status, EndCause cause);

  SnakeMap map_;
  SnakeConfig config_;
  std::shared_ptr<const AppleLayout> layout_;
  std::shared_ptr<const DistanceTable> distances_;
  std::array<std::deque<LocationId>, 2> bodies_;
  std::array<std::vector<bool>, 2> eaten_;
  std::array<int, 2> scores_{};
  std::array<TaskCursor, 2> queues_{};
  std::vector<AdversaryBehavior> behaviors_;
  std::uint32_t turn_ = 0;
  long tick_ = 0;
  SnakeStatus status_ = SnakeStatus::Running;
  EndCause cause_ = EndCause::None;
  Rng rng_;
};

SnakeState to_shield_state(const SnakeGame& game);

/// Weighted behavior for the adversary: at every decision location the
/// tasks whose first step is closest to one of `targets` get weight 4, the
/// others 1. Uniform when there are no targets.
AdversaryBehavior apple_seeking_behavior(const Arena& arena, const DistanceTable& distances,
                                         const std::vector<LocationId>& targets);

}  // namespace oshield
