#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oshield/behavior.hpp"
#include "oshield/shield.hpp"
#include "oshield/snake.hpp"

namespace oshield {

struct LearnerConfig {
  double alpha = 0.1;
  double gamma = 0.5;
  double epsilon = 0.6;
  int episodes = 800;
  std::uint32_t horizon = 15;
  double delta = 1.0;

  /// Throws std::invalid_argument when alpha, gamma or epsilon leave [0, 1].
  void validate() const;
};

/// Feature extractor: one row per (game, task) at an avatar decision.
using FeatureFn = std::vector<double> (*)(const SnakeGame& game, TaskId task);

struct FeatureSet {
  std::string id;
  std::size_t size;
  FeatureFn extract;
};

/// "v1": bias, normalized distance from the task's end to the nearest own
/// apple (0 when none is left). "v2": v1 plus the normalized distance from
/// the task's end to the adversary head. Throws std::invalid_argument.
const FeatureSet& feature_set(std::string_view id);
std::vector<std::string> feature_set_ids();

std::vector<double> features(const SnakeGame& game, TaskId task, std::string_view id = "v1");

/// Linear Q-function over task features.
struct QFunction {
  std::vector<double> weights;
  std::string features = "v1";

  static QFunction zero(std::string_view features = "v1");
  double value(std::span<const double> f) const;
};

/// w += alpha * (reward + gamma * next_best - w.f) * f. Throws
/// DivergenceDetected if a weight becomes non-finite.
QFunction q_update(QFunction q, std::span<const double> f, double reward, double next_best,
                   const LearnerConfig& config);

/// Epsilon-greedy over the candidates: uniform with probability epsilon,
/// otherwise the highest Q-value (ties to the lowest task id).
/// `rows[i]` are the features of `candidates[i]`.
TaskId select_task(const QFunction& q, std::span<const TaskId> candidates,
                   std::span<const std::vector<double>> rows, double epsilon, Rng& rng);

/// Candidates are the shield's allowed tasks when a shield is given (falling
/// back to all available tasks if none of them is available), otherwise all
/// available tasks.
std::vector<TaskId> candidate_tasks(std::span<const TaskId> available, const Shield* shield);

TaskId select_task(const QFunction& q, const SnakeGame& game, const Shield* shield, double epsilon, Rng& rng);

/// {"weights":[...],"features":"v1"}. load throws ParseError.
std::string save_weights(const QFunction& q);
QFunction load_weights(std::string_view json_text);

}  // namespace oshield
