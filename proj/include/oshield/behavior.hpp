#pragma once

#include <map>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "oshield/arena.hpp"

namespace oshield {

/// Stochastic task choice of one adversary: a distribution over tasks_at(v)
/// for every decision location v. Probabilities are aligned with the order of
/// arena.tasks_at(v).
class AdversaryBehavior {
 public:
  AdversaryBehavior() = default;

  /// Throws NotADecisionLocation when v has no distribution.
  std::span<const double> probabilities(LocationId v) const;
  double probability(const Arena& arena, TaskId task) const;

  std::size_t location_count() const { return table_.size(); }

  bool operator==(const AdversaryBehavior&) const = default;

 private:
  friend AdversaryBehavior uniform_behavior(const Arena& arena);
  friend AdversaryBehavior weighted_behavior(const Arena& arena,
                                             const std::map<LocationId, std::vector<double>>& weights);

  std::vector<std::vector<double>> table_;  // indexed by location; empty off V_D
};

AdversaryBehavior uniform_behavior(const Arena& arena);

/// Normalizes per-location weights (indexed like tasks_at(v)); locations
/// absent from the map fall back to uniform. Throws AllZeroWeights when a
/// covered location has no positive weight, std::invalid_argument on negative
/// or mis-sized weight lists.
AdversaryBehavior weighted_behavior(const Arena& arena, const std::map<LocationId, std::vector<double>>& weights);

using Rng = std::mt19937_64;

/// Draws a task at v according to the behavior. Throws NotADecisionLocation.
TaskId sample_task(const Arena& arena, const AdversaryBehavior& behavior, LocationId v, Rng& rng);

/// Behavior JSON: {"agent":int, "weights":{"node-id":[w1,...]}}. Returns the
/// agent index alongside the behavior. Throws ParseError.
struct LoadedBehavior {
  int agent = 1;
  AdversaryBehavior behavior;
};
LoadedBehavior load_behavior(const Arena& arena, std::string_view json_text);

}  // namespace oshield
