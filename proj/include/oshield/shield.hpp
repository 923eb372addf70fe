#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "oshield/submdp.hpp"

namespace oshield {

/// Minimal probability of eventually reaching an unsafe state, for every node
/// of the (possibly restricted) sub-MDP. One backward pass in reverse
/// topological (index) order; the graph is a DAG so no iteration is needed.
template <class Payload>
std::vector<double> reach_values(const SubMdpView<Payload>& view) {
  const SubMdp<Payload>& m = view.model();
  std::vector<double> value(m.size(), 0.0);
  for (StateIndex i = static_cast<StateIndex>(m.size()); i-- > 0;) {
    switch (m.kind(i)) {
      case NodeKind::Unsafe:
        value[i] = 1.0;
        break;
      case NodeKind::Frontier:
        value[i] = 0.0;
        break;
      case NodeKind::AvatarDecision: {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : view.edges(i)) best = std::min(best, value[e.target]);
        value[i] = best;
        break;
      }
      case NodeKind::AdversaryDecision: {
        double sum = 0.0;
        for (const auto& e : view.edges(i)) sum += e.probability * value[e.target];
        value[i] = sum;
        break;
      }
      case NodeKind::Movement:
        value[i] = value[m.edges(i).front().target];
        break;
    }
  }
  return value;
}

template <class Payload>
double min_reach_probability(const SubMdpView<Payload>& view) {
  return reach_values(view)[view.model().initial()];
}

template <class Payload>
double min_reach_probability(const SubMdp<Payload>& m) {
  return min_reach_probability(SubMdpView<Payload>(m));
}

struct TaskValuation {
  std::vector<TaskId> tasks;  // ascending task ids
  std::vector<double> values;
  double optimal = 0.0;

  double value(TaskId task) const {
    auto it = std::lower_bound(tasks.begin(), tasks.end(), task);
    if (it == tasks.end() || *it != task) throw TaskNotAvailable("task " + std::to_string(task) + " was not valued");
    return values[static_cast<std::size_t>(it - tasks.begin())];
  }
  std::size_t size() const { return tasks.size(); }
};

struct Shield {
  std::vector<TaskId> allowed;  // ascending task ids, never empty
  double delta = 1.0;
  TaskValuation valuation;

  bool allows(TaskId task) const { return std::binary_search(allowed.begin(), allowed.end(), task); }
};

/// Per-task values for every node of a sub-MDP. Nodes at or after
/// first_decision_end() share one value array; earlier nodes carry one array
/// per first-decision task.
struct ValueTable {
  std::vector<TaskId> tasks;
  StateIndex split = 0;
  std::vector<double> tail;
  std::vector<std::vector<double>> head;

  double at(std::size_t task_slot, StateIndex i) const { return i >= split ? tail[i - split] : head[task_slot][i]; }
};

namespace detail {

template <class Payload>
double node_value(const SubMdp<Payload>& m, StateIndex i, TaskId restricted,
                  const auto& value_of) {
  switch (m.kind(i)) {
    case NodeKind::Unsafe:
      return 1.0;
    case NodeKind::Frontier:
      return 0.0;
    case NodeKind::AvatarDecision: {
      auto edges = m.edges(i);
      if (restricted != kNoTask && m.distance(i) == m.first_decision_distance()) {
        for (const auto& e : edges) {
          if (e.task == restricted) return value_of(e.target);
        }
      }
      double best = std::numeric_limits<double>::infinity();
      for (const auto& e : edges) best = std::min(best, value_of(e.target));
      return best;
    }
    case NodeKind::AdversaryDecision: {
      double sum = 0.0;
      for (const auto& e : m.edges(i)) sum += e.probability * value_of(e.target);
      return sum;
    }
    case NodeKind::Movement:
      return value_of(m.edges(i).front().target);
  }
  return 0.0;
}

}  // namespace detail

/// Computes the value table for the given first-decision tasks. The part of
/// the DAG behind the first decision layer is evaluated once and shared.
template <class Payload>
ValueTable compute_value_table(const SubMdp<Payload>& m, std::vector<TaskId> tasks) {
  ValueTable table;
  table.tasks = std::move(tasks);
  table.split = m.first_decision_end();
  const auto n = static_cast<StateIndex>(m.size());
  table.tail.assign(n - table.split, 0.0);
  for (StateIndex i = n; i-- > table.split;) {
    table.tail[i - table.split] =
        detail::node_value(m, i, kNoTask, [&](StateIndex j) { return table.tail[j - table.split]; });
  }
  table.head.assign(table.tasks.size(), std::vector<double>(table.split, 0.0));
  for (std::size_t k = 0; k < table.tasks.size(); ++k) {
    auto& head = table.head[k];
    for (StateIndex i = table.split; i-- > 0;) {
      head[i] = detail::node_value(m, i, table.tasks[k], [&](StateIndex j) { return table.at(k, j); });
    }
  }
  return table;
}

inline TaskValuation make_valuation(std::vector<TaskId> tasks, std::vector<double> values) {
  TaskValuation v;
  v.tasks = std::move(tasks);
  v.values = std::move(values);
  v.optimal = v.values.empty() ? 0.0 : *std::min_element(v.values.begin(), v.values.end());
  return v;
}

/// Everything needed to answer shield queries for one sub-MDP and to update
/// them cheaply after adversary decisions.
template <class Payload>
struct ShieldAnalysis {
  SubMdp<Payload> submdp;
  ValueTable table;
  TaskValuation valuation;
};

inline TaskValuation valuation_at(const ValueTable& table, StateIndex root, const std::vector<TaskId>& tasks) {
  std::vector<double> values;
  for (TaskId t : tasks) {
    const auto slot = static_cast<std::size_t>(std::lower_bound(table.tasks.begin(), table.tasks.end(), t) -
                                               table.tasks.begin());
    values.push_back(table.at(slot, root));
  }
  return make_valuation(tasks, std::move(values));
}

/// Values the first decision of an already built sub-MDP. When every path
/// reaches an unsafe state before the next decision there is no first
/// decision state; then each task at the next decision location gets the
/// unrestricted root value.
template <class Payload>
ShieldAnalysis<Payload> analyze(const Arena& arena, SubMdp<Payload> m) {
  ShieldAnalysis<Payload> a{std::move(m), {}, {}};
  if (a.submdp.first_decision_states().empty()) {
    const auto fallback = arena.tasks_at(a.submdp.next_decision_location());
    a.table.tasks.assign(fallback.begin(), fallback.end());
    a.table.split = 0;
    a.table.tail = reach_values(SubMdpView<Payload>(a.submdp));
  } else {
    a.table = compute_value_table(a.submdp, tasks_of_first_decision(a.submdp));
  }
  a.valuation = valuation_at(a.table, a.submdp.initial(), a.table.tasks);
  return a;
}

/// Builds the sub-MDP rooted at `root` and values its first decision.
template <Dynamics D, class Unsafe>
ShieldAnalysis<typename D::Payload> analyze(const Model<D>& model, const GlobalState<typename D::Payload>& root,
                                            std::uint32_t horizon, Unsafe&& unsafe) {
  return analyze(model.arena, build_submdp_from(model, root, horizon, std::forward<Unsafe>(unsafe)));
}

/// Re-values the first decision from a state observed after an adversary
/// decision, reusing the value table of a previous analysis. The result
/// equals a fresh analysis rooted at `observed`. Returns nullopt when the
/// observed state is not a node of the previous sub-MDP.
template <class Payload>
std::optional<TaskValuation> revalue(const Arena& arena, const ShieldAnalysis<Payload>& previous,
                                     const GlobalState<Payload>& observed) {
  const SubMdp<Payload>& m = previous.submdp;
  const std::uint32_t rounds = rounds_to_next_decision(arena, observed);
  if (rounds > m.first_decision_distance()) return std::nullopt;
  const auto node = m.find(observed, m.first_decision_distance() - rounds);
  if (!node) return std::nullopt;

  // First decision states reachable from the node; all lie before split.
  const StateIndex split = m.first_decision_end();
  std::vector<TaskId> tasks;
  if (*node < split) {
    std::vector<bool> visited(split, false);
    std::vector<StateIndex> stack{*node};
    visited[*node] = true;
    while (!stack.empty()) {
      const StateIndex i = stack.back();
      stack.pop_back();
      if (m.is_first_decision(i)) {
        const auto& fd = m.first_decision_tasks(i);
        tasks.insert(tasks.end(), fd.begin(), fd.end());
        continue;
      }
      for (const auto& e : m.edges(i)) {
        if (e.target < split && !visited[e.target]) {
          visited[e.target] = true;
          stack.push_back(e.target);
        }
      }
    }
  }
  std::sort(tasks.begin(), tasks.end());
  tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());

  if (tasks.empty()) {
    // No first decision below this node, so no restriction applies and every
    // task slot holds the unrestricted value.
    const double v = *node >= split || previous.table.head.empty() ? previous.table.at(0, *node)
                                                                   : previous.table.head.front()[*node];
    const auto fallback = arena.tasks_at(m.next_decision_location());
    std::vector<TaskId> all(fallback.begin(), fallback.end());
    return make_valuation(all, std::vector<double>(all.size(), v));
  }
  return valuation_at(previous.table, *node, tasks);
}

/// Task-valuation: for each task t of the first decision, the minimal
/// probability to reach an unsafe state from the root when every first
/// decision state is restricted to t.
template <class Payload>
TaskValuation valuations(const SubMdp<Payload>& m) {
  const auto tasks = tasks_of_first_decision(m);
  return valuation_at(compute_value_table(m, tasks), m.initial(), tasks);
}

/// Tasks t with delta * Val(t) <= optimal value. Throws DeltaOutOfRange.
Shield make_shield(const TaskValuation& valuation, double delta);

struct UpdateInfo {
  bool reused = false;
};

/// Shield for the upcoming decision after observing `observed` (typically
/// right after an adversary committed to a task). Reuses `previous` when the
/// observed state is one of its nodes and the horizon matches; otherwise
/// builds a fresh sub-MDP rooted at the observed state.
template <Dynamics D, class Unsafe>
Shield update_shield(const Model<D>& model, const GlobalState<typename D::Payload>& observed, std::uint32_t horizon,
                     double delta, Unsafe&& unsafe, const ShieldAnalysis<typename D::Payload>* previous,
                     UpdateInfo* info = nullptr) {
  if (previous != nullptr && previous->submdp.horizon() == horizon) {
    if (auto v = revalue(model.arena, *previous, observed)) {
      if (info) info->reused = true;
      return make_shield(*v, delta);
    }
  }
  if (info) info->reused = false;
  return make_shield(analyze(model, observed, horizon, std::forward<Unsafe>(unsafe)).valuation, delta);
}

enum class RiskBand { Green, Yellow, Orange, Red };

/// green = 0, yellow in (0, 1/3], orange in (1/3, 2/3], red above 2/3.
RiskBand risk_band(double value);
std::map<TaskId, RiskBand> risk_bands(const TaskValuation& valuation);
std::string_view to_string(RiskBand band);

}  // namespace oshield
