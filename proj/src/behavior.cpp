#include "oshield/behavior.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "oshield/errors.hpp"

namespace oshield {

std::span<const double> AdversaryBehavior::probabilities(LocationId v) const {
  if (v >= table_.size() || table_[v].empty()) {
    throw NotADecisionLocation("behavior has no distribution at location " + std::to_string(v));
  }
  return table_[v];
}

double AdversaryBehavior::probability(const Arena& arena, TaskId task) const {
  return probabilities(arena.task(task).origin())[arena.local_index(task)];
}

AdversaryBehavior uniform_behavior(const Arena& arena) {
  AdversaryBehavior b;
  b.table_.resize(arena.size());
  for (LocationId v : arena.decision_locations()) {
    const auto n = arena.tasks_at(v).size();
    b.table_[v].assign(n, 1.0 / static_cast<double>(n));
  }
  return b;
}

AdversaryBehavior weighted_behavior(const Arena& arena, const std::map<LocationId, std::vector<double>>& weights) {
  AdversaryBehavior b = uniform_behavior(arena);
  for (const auto& [v, w] : weights) {
    const auto tasks = arena.tasks_at(v);
    if (w.size() != tasks.size()) {
      throw std::invalid_argument("weights at " + arena.describe(v) + " have " + std::to_string(w.size()) +
                                  " entries for " + std::to_string(tasks.size()) + " tasks");
    }
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("weights at " + arena.describe(v) + " must be finite and non-negative");
      }
      total += x;
    }
    if (total <= 0.0) throw AllZeroWeights("all weights at " + arena.describe(v) + " are zero");
    auto& row = b.table_[v];
    for (std::size_t i = 0; i < w.size(); ++i) row[i] = w[i] / total;
  }
  return b;
}

TaskId sample_task(const Arena& arena, const AdversaryBehavior& behavior, LocationId v, Rng& rng) {
  const auto tasks = arena.tasks_at(v);
  const auto probs = behavior.probabilities(v);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  return tasks[pick(rng)];
}

LoadedBehavior load_behavior(const Arena& arena, std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("behavior JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("behavior JSON: document must be an object");
  LoadedBehavior out;
  if (auto it = doc.find("agent"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() < 1) {
      throw ParseError("behavior JSON: 'agent' must be a positive integer");
    }
    out.agent = it->get<int>();
  }
  std::map<LocationId, std::vector<double>> weights;
  if (auto it = doc.find("weights"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("behavior JSON: 'weights' must be an object");
    for (const auto& [id, list] : it->items()) {
      auto v = arena.find(id);
      if (!v) throw ParseError("behavior JSON: unknown node '" + id + "'");
      if (!list.is_array()) throw ParseError("behavior JSON: weights for '" + id + "' must be an array");
      std::vector<double> w;
      for (const auto& x : list) {
        if (!x.is_number()) throw ParseError("behavior JSON: weights for '" + id + "' must be numbers");
        w.push_back(x.get<double>());
      }
      weights.emplace(*v, std::move(w));
    }
  }
  try {
    out.behavior = weighted_behavior(arena, weights);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("behavior JSON: ") + e.what());
  }
  return out;
}

}  // namespace oshield
