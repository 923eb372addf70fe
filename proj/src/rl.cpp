#include "oshield/rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "oshield/errors.hpp"

namespace oshield {

void LearnerConfig::validate() const {
  auto unit = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  unit(alpha, "alpha");
  unit(gamma, "gamma");
  unit(epsilon, "epsilon");
  unit(delta, "delta");
  if (episodes < 0) throw std::invalid_argument("episodes must be non-negative");
}

namespace {

double diameter(const SnakeGame& game) { return std::max(1, game.distances().diameter()); }

double apple_distance(const SnakeGame& game, TaskId task) {
  const auto apples = game.apples(0);
  if (apples.empty()) return 0.0;
  const LocationId end = game.arena().task(task).destination();
  int best = std::numeric_limits<int>::max();
  for (LocationId a : apples) {
    const int d = game.distances()(end, a);
    if (d >= 0) best = std::min(best, d);
  }
  if (best == std::numeric_limits<int>::max()) return 1.0;
  return best / diameter(game);
}

std::vector<double> features_v1(const SnakeGame& game, TaskId task) { return {1.0, apple_distance(game, task)}; }

std::vector<double> features_v2(const SnakeGame& game, TaskId task) {
  const LocationId end = game.arena().task(task).destination();
  const int d = game.distances()(end, game.body(1).front());
  return {1.0, apple_distance(game, task), d < 0 ? 1.0 : d / diameter(game)};
}

const std::vector<FeatureSet>& registry() {
  static const std::vector<FeatureSet> sets{{"v1", 2, &features_v1}, {"v2", 3, &features_v2}};
  return sets;
}

}  // namespace

const FeatureSet& feature_set(std::string_view id) {
  for (const FeatureSet& f : registry()) {
    if (f.id == id) return f;
  }
  throw std::invalid_argument("unknown feature set '" + std::string(id) + "'");
}

std::vector<std::string> feature_set_ids() {
  std::vector<std::string> out;
  for (const FeatureSet& f : registry()) out.push_back(f.id);
  return out;
}

std::vector<double> features(const SnakeGame& game, TaskId task, std::string_view id) {
  return feature_set(id).extract(game, task);
}

QFunction QFunction::zero(std::string_view features) {
  QFunction q;
  q.features = std::string(features);
  q.weights.assign(feature_set(features).size, 0.0);
  return q;
}

double QFunction::value(std::span<const double> f) const {
  if (f.size() != weights.size()) throw std::invalid_argument("feature vector does not match the weights");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += weights[i] * f[i];
  return sum;
}

QFunction q_update(QFunction q, std::span<const double> f, double reward, double next_best,
                   const LearnerConfig& config) {
  const double error = reward + config.gamma * next_best - q.value(f);
  for (std::size_t i = 0; i < f.size(); ++i) q.weights[i] += config.alpha * error * f[i];
  for (double w : q.weights) {
    if (!std::isfinite(w)) throw DivergenceDetected("Q-function weights diverged");
  }
  return q;
}

TaskId select_task(const QFunction& q, std::span<const TaskId> candidates,
                   std::span<const std::vector<double>> rows, double epsilon, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("no candidate tasks");
  if (std::bernoulli_distribution(epsilon)(rng)) {
    return candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  }
  std::size_t best = 0;
  double best_value = q.value(rows[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = q.value(rows[i]);
    if (v > best_value || (v == best_value && candidates[i] < candidates[best])) {
      best = i;
      best_value = v;
    }
  }
  return candidates[best];
}

std::vector<TaskId> candidate_tasks(std::span<const TaskId> available, const Shield* shield) {
  std::vector<TaskId> out;
  if (shield != nullptr) {
    for (TaskId t : available) {
      if (shield->allows(t)) out.push_back(t);
    }
  }
  if (out.empty()) out.assign(available.begin(), available.end());
  return out;
}

TaskId select_task(const QFunction& q, const SnakeGame& game, const Shield* shield, double epsilon, Rng& rng) {
  const auto available = game.avatar_tasks();
  const auto candidates = candidate_tasks(available, shield);
  std::vector<std::vector<double>> rows;
  for (TaskId t : candidates) rows.push_back(features(game, t, q.features));
  return select_task(q, candidates, rows, epsilon, rng);
}

std::string save_weights(const QFunction& q) {
  nlohmann::ordered_json doc;
  doc["weights"] = q.weights;
  doc["features"] = q.features;
  return doc.dump();
}

QFunction load_weights(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("weights JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("weights") || !doc["weights"].is_array()) {
    throw ParseError("weights JSON: missing 'weights' array");
  }
  QFunction q;
  q.features = doc.value("features", std::string("v1"));
  try {
    feature_set(q.features);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("weights JSON: ") + e.what());
  }
  for (const auto& w : doc["weights"]) {
    if (!w.is_number()) throw ParseError("weights JSON: weights must be numbers");
    q.weights.push_back(w.get<double>());
  }
  if (q.weights.size() != feature_set(q.features).size) {
    throw ParseError("weights JSON: expected " + std::to_string(feature_set(q.features).size) + " weights");
  }
  return q;
}

}  // namespace oshield
