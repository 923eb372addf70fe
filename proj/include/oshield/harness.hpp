#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "oshield/online.hpp"
#include "oshield/rl.hpp"
#include "oshield/snake.hpp"

namespace oshield {

using SnakeShield = OnlineShield<SnakeDynamics, SnakeCollision>;

struct EpisodeOptions {
  bool shielded = false;
  OnlineConfig online;
  double epsilon = 0.0;  // 1 = uniformly random avatar
  bool learn = false;
  LearnerConfig learner;
};

struct EpisodeResult {
  double reward = 0.0;
  SnakeStatus status = SnakeStatus::Running;
  EndCause cause = EndCause::None;
  int decisions = 0;
  long ticks = 0;
  OnlineStats shield_stats;

  bool won() const { return status == SnakeStatus::AvatarWon; }
  bool collision() const { return cause == EndCause::Collision; }
};

/// Plays `game` to the end. The avatar picks tasks epsilon-greedily with `q`
/// among the shield's allowed tasks (or all tasks when unshielded); with
/// options.learn set, q is updated after every decision.
EpisodeResult play_episode(SnakeGame& game, QFunction& q, const EpisodeOptions& options, Rng& rng);

// ---------------------------------------------------------------------------
// Timing sweep

struct BenchConfig {
  SnakeMap map;
  std::vector<std::uint32_t> horizons;
  std::vector<int> lengths;
  int samples = 200;
  std::uint64_t seed = 1;
};

struct BenchRecord {
  std::uint32_t horizon = 0;
  int length = 0;
  double mean_seconds = 0.0;
  double max_seconds = 0.0;
  int samples = 0;
};

/// Post-decision states from random play without apples, so that both snakes
/// keep exactly `length` cells. Deterministic in the seed.
std::vector<SnakeState> sample_post_decision_states(const SnakeMap& map, int length, int count, std::uint64_t seed);

/// Times sub-MDP construction plus valuation on the same sampled states for
/// every horizon.
std::vector<BenchRecord> bench_horizon(const BenchConfig& config);

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);

// ---------------------------------------------------------------------------
// Learning runs

struct TrainConfig {
  SnakeMap map;
  SnakeConfig snake;
  LearnerConfig learner;
  std::string features = "v1";
  std::vector<std::uint64_t> seeds{1};
  int eval_games = 200;
  int window = 50;
  std::chrono::milliseconds budget{0};
};

struct TrainResult {
  bool shielded = false;
  std::vector<double> episode_rewards;  // averaged over seeds
  std::vector<double> windowed;         // mean over consecutive windows
  long training_collisions = 0;         // collision losses while learning
  long training_wins = 0;
  long eval_games = 0;
  long eval_wins = 0;
  long eval_collisions = 0;
  std::vector<QFunction> weights;  // one per seed

  double eval_win_rate() const { return eval_games == 0 ? 0.0 : static_cast<double>(eval_wins) / eval_games; }
};

/// Trains one agent per seed and evaluates it greedily afterwards. Episode
/// games use the same seeds in both modes.
TrainResult train(const TrainConfig& config, bool shielded);

std::vector<double> window_means(const std::vector<double>& values, int window);
void write_reward_csv(std::ostream& out, const TrainResult& result, int window);

// ---------------------------------------------------------------------------
// Plain arenas for one-shot queries

/// An arena from either the JSON format or an ASCII map (spawn markers 'A'
/// and 'E' are read as corridor).
Arena load_any_arena(std::string_view text);

/// State JSON:
///   {"agents":[{"at":"1,1","task":["1,1","1,2","1,3"],"step":0},{"at":"5,5"}],"turn":0}
/// A missing "task" means an empty queue. Throws ParseError.
PlainState parse_plain_state(const Arena& arena, std::string_view json_text);

/// Valuation JSON with task paths, values, bands, allowed indices and delta.
std::string valuation_json(const Arena& arena, const Shield& shield);

}  // namespace oshield
