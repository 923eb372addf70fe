#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "oshield/arena.hpp"
#include "oshield/behavior.hpp"
#include "oshield/errors.hpp"

namespace oshield {

/// Remaining activities of one agent: the edges of `task` from `step` on.
/// The default-constructed cursor is the empty queue.
struct TaskCursor {
  TaskId task = kNoTask;
  std::uint16_t step = 0;

  bool empty() const { return task == kNoTask; }
  bool operator==(const TaskCursor&) const = default;
};

inline std::size_t remaining_edges(const Arena& arena, TaskCursor q) {
  return q.empty() ? 0 : arena.task(q.task).length() - q.step;
}

/// A state of the safety-relevant MDP: positions and task queues of all m+1
/// agents (index 0 is the avatar), whose turn it is, and an environment
/// payload that the dynamics evolve deterministically on every move.
template <class Payload>
struct GlobalState {
  std::vector<LocationId> positions;
  std::vector<TaskCursor> queues;
  std::uint32_t turn = 0;
  Payload payload{};

  std::size_t agent_count() const { return positions.size(); }
  bool operator==(const GlobalState&) const = default;
};

struct NoPayload {
  bool operator==(const NoPayload&) const = default;
};

inline std::size_t hash_mix(std::size_t seed, std::size_t value) {
  // splitmix64 finalizer over the running seed
  std::uint64_t x = seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(x ^ (x >> 31));
}

/// Environment hooks. `on_move` evolves the payload when `agent` traverses
/// (from, to); `task_enabled` may forbid tasks for state-dependent reasons
/// (e.g. a snake cannot reverse into its own neck).
template <class D>
concept Dynamics = requires(const D& d, typename D::Payload& p, const GlobalState<typename D::Payload>& s,
                            const Arena& arena, std::size_t agent, LocationId v, TaskId t) {
  { d.on_move(p, agent, v, v) };
  { d.task_enabled(arena, s, agent, t) } -> std::convertible_to<bool>;
  { d.hash(std::as_const(p)) } -> std::convertible_to<std::size_t>;
};

/// The bare model with plain positions: nothing beyond positions,
/// queues and the turn counter.
struct PlainDynamics {
  using Payload = NoPayload;
  void on_move(Payload&, std::size_t, LocationId, LocationId) const {}
  bool task_enabled(const Arena&, const GlobalState<Payload>&, std::size_t, TaskId) const { return true; }
  std::size_t hash(const Payload&) const { return 0; }
};

using PlainState = GlobalState<NoPayload>;

/// Non-owning bundle of arena, adversary behaviors (behaviors[i-1] drives
/// agent i) and the environment dynamics.
template <Dynamics D>
struct Model {
  using Payload = typename D::Payload;
  using State = GlobalState<Payload>;

  const Arena& arena;
  std::span<const AdversaryBehavior> behaviors;
  D dynamics{};

  std::size_t agent_count() const { return behaviors.size() + 1; }
};

/// Hash of positions, queues and turn; the payload is hashed by the dynamics.
template <class Payload>
std::size_t hash_core(const GlobalState<Payload>& s) {
  std::size_t h = s.turn;
  for (LocationId v : s.positions) h = hash_mix(h, v);
  for (TaskCursor q : s.queues) h = hash_mix(h, (static_cast<std::size_t>(q.task) << 16) | q.step);
  return h;
}

template <class Payload, Dynamics D>
std::size_t hash_state(const GlobalState<Payload>& s, const D& dynamics) {
  return hash_mix(hash_core(s), dynamics.hash(s.payload));
}

struct DecideTask {
  TaskId task;
  bool operator==(const DecideTask&) const = default;
};
struct AdvDecide {
  bool operator==(const AdvDecide&) const = default;
};
struct Move {
  bool operator==(const Move&) const = default;
};
using Action = std::variant<DecideTask, AdvDecide, Move>;

template <class Payload>
struct Transition {
  double probability;
  GlobalState<Payload> state;
  TaskId task = kNoTask;  // the task chosen by a decision, kNoTask for moves
};

template <class Payload>
bool is_decision_state(const GlobalState<Payload>& s) {
  return s.turn == 0 && s.queues.at(0).empty();
}

/// Tasks the given agent may select in s: the tasks at its location that the
/// dynamics allow, or all of them if the dynamics forbid every one.
template <Dynamics D>
std::vector<TaskId> enabled_tasks(const Model<D>& model, const typename Model<D>::State& s, std::size_t agent) {
  const auto all = model.arena.tasks_at(s.positions[agent]);
  std::vector<TaskId> out;
  out.reserve(all.size());
  for (TaskId t : all) {
    if (model.dynamics.task_enabled(model.arena, s, agent, t)) out.push_back(t);
  }
  if (out.empty()) out.assign(all.begin(), all.end());
  return out;
}

struct Outcome {
  double probability;
  TaskId task;
};

/// Adversary decision outcomes: the behavior's support restricted to enabled
/// tasks. Probabilities are renormalized only when the restriction removed
/// some support.
template <Dynamics D>
std::vector<Outcome> adversary_outcomes(const Model<D>& model, const typename Model<D>::State& s, std::size_t agent) {
  const LocationId v = s.positions[agent];
  const auto tasks = model.arena.tasks_at(v);
  const auto probs = model.behaviors[agent - 1].probabilities(v);
  std::vector<Outcome> out;
  out.reserve(tasks.size());
  bool filtered = false;
  double mass = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    if (!model.dynamics.task_enabled(model.arena, s, agent, tasks[i])) {
      filtered = true;
      continue;
    }
    out.push_back({probs[i], tasks[i]});
    mass += probs[i];
  }
  if (out.empty()) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (probs[i] > 0.0) out.push_back({probs[i], tasks[i]});
    }
  } else if (filtered) {
    for (Outcome& o : out) o.probability /= mass;
  }
  return out;
}

enum class StepKind { AvatarDecision, AdversaryDecision, Movement };

template <class Payload>
StepKind step_kind(const GlobalState<Payload>& s) {
  if (!s.queues[s.turn].empty()) return StepKind::Movement;
  return s.turn == 0 ? StepKind::AvatarDecision : StepKind::AdversaryDecision;
}

template <Dynamics D>
typename Model<D>::State with_task(const typename Model<D>::State& s, std::size_t agent, TaskId task) {
  auto next = s;
  next.queues[agent] = TaskCursor{task, 0};
  return next;
}

/// The deterministic activity step of the agent whose turn it is.
template <Dynamics D>
typename Model<D>::State apply_move(const Model<D>& model, const typename Model<D>::State& s) {
  const std::size_t agent = s.turn;
  const TaskCursor q = s.queues[agent];
  const Task& task = model.arena.task(q.task);
  const LocationId from = task.path[q.step];
  const LocationId to = task.path[q.step + 1];
  if (from != s.positions[agent]) {
    throw std::logic_error("task queue of agent " + std::to_string(agent) + " does not start at its position");
  }
  auto next = s;
  next.positions[agent] = to;
  const auto step = static_cast<std::uint16_t>(q.step + 1);
  next.queues[agent] = step == task.length() ? TaskCursor{} : TaskCursor{q.task, step};
  model.dynamics.on_move(next.payload, agent, from, to);
  next.turn = static_cast<std::uint32_t>((s.turn + 1) % model.agent_count());
  return next;
}

template <Dynamics D>
std::vector<Action> enabled_actions(const Model<D>& model, const typename Model<D>::State& s) {
  switch (step_kind(s)) {
    case StepKind::AvatarDecision: {
      std::vector<Action> out;
      for (TaskId t : enabled_tasks(model, s, 0)) out.emplace_back(DecideTask{t});
      return out;
    }
    case StepKind::AdversaryDecision:
      return {AdvDecide{}};
    case StepKind::Movement:
      return {Move{}};
  }
  return {};
}

template <Dynamics D>
std::vector<Transition<typename D::Payload>> successors(const Model<D>& model, const typename Model<D>::State& s,
                                                        const Action& action) {
  using Payload = typename D::Payload;
  const StepKind kind = step_kind(s);
  std::vector<Transition<Payload>> out;
  if (const auto* decide = std::get_if<DecideTask>(&action)) {
    if (kind == StepKind::AvatarDecision) {
      const auto tasks = enabled_tasks(model, s, 0);
      if (std::find(tasks.begin(), tasks.end(), decide->task) != tasks.end()) {
        out.push_back({1.0, with_task<D>(s, 0, decide->task), decide->task});
        return out;
      }
    }
    throw ActionNotEnabled("task " + std::to_string(decide->task) + " is not enabled in this state");
  }
  if (std::holds_alternative<AdvDecide>(action)) {
    if (kind != StepKind::AdversaryDecision) throw ActionNotEnabled("no adversary decision in this state");
    for (const Outcome& o : adversary_outcomes(model, s, s.turn)) {
      out.push_back({o.probability, with_task<D>(s, s.turn, o.task), o.task});
    }
    return out;
  }
  if (kind != StepKind::Movement) throw ActionNotEnabled("current agent has an empty task queue");
  out.push_back({1.0, apply_move(model, s), kNoTask});
  return out;
}

/// One turn of the current agent: task selection if its queue is empty
/// (avatar via the policy, adversaries by sampling), then one move.
template <Dynamics D, class Policy>
  requires std::invocable<Policy&, const typename Model<D>::State&, std::span<const TaskId>>
typename Model<D>::State advance_turn(const Model<D>& model, const typename Model<D>::State& s, Policy&& avatar_policy,
                                      Rng& rng) {
  auto cur = s;
  const std::size_t agent = cur.turn;
  if (cur.queues[agent].empty()) {
    if (agent == 0) {
      const auto tasks = enabled_tasks(model, cur, 0);
      const TaskId chosen = avatar_policy(std::as_const(cur), std::span<const TaskId>(tasks));
      if (std::find(tasks.begin(), tasks.end(), chosen) == tasks.end()) {
        throw PolicyReturnedBlockedTask("avatar policy returned task " + std::to_string(chosen) +
                                        " which is not available");
      }
      cur = with_task<D>(cur, 0, chosen);
    } else {
      const auto outcomes = adversary_outcomes(model, cur, agent);
      std::vector<double> weights;
      for (const Outcome& o : outcomes) weights.push_back(o.probability);
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      cur = with_task<D>(cur, agent, outcomes[pick(rng)].task);
    }
  }
  return apply_move(model, cur);
}

/// State with every agent at the given location, empty queues, avatar to move.
inline PlainState initial_state(std::span<const LocationId> positions) {
  PlainState s;
  s.positions.assign(positions.begin(), positions.end());
  s.queues.assign(positions.size(), TaskCursor{});
  return s;
}

}  // namespace oshield
