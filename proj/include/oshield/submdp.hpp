#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "oshield/mdp.hpp"

namespace oshield {

using StateIndex = std::uint32_t;

enum class NodeKind : std::uint8_t {
  AvatarDecision,
  AdversaryDecision,
  Movement,
  Frontier,  // at distance == bound, not expanded
  Unsafe,    // absorbing target, not expanded
};

/// Distance-annotated finite-horizon fragment of the safety-relevant MDP,
/// rooted at a state where the avatar is executing a task. Node indices are a
/// topological order: every edge goes from a lower to a higher index, and the
/// root is index 0.
template <class Payload>
class SubMdp {
 public:
  using State = GlobalState<Payload>;

  struct Edge {
    double probability;
    StateIndex target;
    TaskId task;  // chosen task for decision edges, kNoTask for moves
  };

  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  StateIndex initial() const { return 0; }

  const State& state(StateIndex i) const { return nodes_[i].state; }
  std::uint32_t distance(StateIndex i) const { return nodes_[i].distance; }
  NodeKind kind(StateIndex i) const { return nodes_[i].kind; }
  std::span<const Edge> edges(StateIndex i) const {
    return {edges_.data() + nodes_[i].first_edge, nodes_[i].edge_count};
  }

  std::uint32_t bound() const { return bound_; }
  std::uint32_t horizon() const { return bound_ - first_decision_distance_; }
  std::uint32_t first_decision_distance() const { return first_decision_distance_; }
  std::size_t agent_count() const { return agent_count_; }

  /// States (s, |t|) with the avatar to move and an empty avatar queue.
  const std::vector<StateIndex>& first_decision_states() const { return first_decision_; }
  bool is_first_decision(StateIndex i) const {
    return nodes_[i].distance == first_decision_distance_ && is_decision_state(nodes_[i].state);
  }
  /// Avatar tasks enabled at a first decision state (also for unsafe sinks).
  const std::vector<TaskId>& first_decision_tasks(StateIndex i) const { return fd_tasks_.at(i); }
  /// Nodes with index >= this bound lie strictly after the first decision
  /// layer; their values do not depend on the first decision.
  StateIndex first_decision_end() const { return first_decision_end_; }

  const std::vector<StateIndex>& unsafe_states() const { return unsafe_; }

  /// Next decision location of the avatar from the root.
  LocationId next_decision_location() const { return next_decision_location_; }

  std::optional<StateIndex> find(const State& s, std::uint32_t d) const {
    auto [lo, hi] = index_.equal_range(hash_mix(hash_mix(hash_core(s), d), payload_hash_(s)));
    for (auto it = lo; it != hi; ++it) {
      if (nodes_[it->second].distance == d && nodes_[it->second].state == s) return it->second;
    }
    return std::nullopt;
  }

  /// Kahn's algorithm over the stored edges. Throws std::logic_error on a cycle.
  std::vector<StateIndex> topological_order() const {
    std::vector<std::uint32_t> indegree(size(), 0);
    for (const Edge& e : edges_) ++indegree[e.target];
    std::deque<StateIndex> ready;
    for (StateIndex i = 0; i < size(); ++i) {
      if (indegree[i] == 0) ready.push_back(i);
    }
    std::vector<StateIndex> order;
    order.reserve(size());
    while (!ready.empty()) {
      const StateIndex i = ready.front();
      ready.pop_front();
      order.push_back(i);
      for (const Edge& e : edges(i)) {
        if (--indegree[e.target] == 0) ready.push_back(e.target);
      }
    }
    if (order.size() != size()) throw std::logic_error("sub-MDP transition graph has a cycle");
    return order;
  }

 private:
  template <Dynamics D, class Unsafe>
  friend SubMdp<typename D::Payload> build_submdp_from(const Model<D>& model, const GlobalState<typename D::Payload>& root,
                                                      std::uint32_t horizon, Unsafe&& unsafe);

  struct Node {
    State state;
    std::uint32_t distance = 0;
    NodeKind kind = NodeKind::Frontier;
    std::uint32_t first_edge = 0;
    std::uint32_t edge_count = 0;
    std::size_t hash = 0;
  };

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_multimap<std::size_t, StateIndex> index_;
  std::function<std::size_t(const State&)> payload_hash_;
  std::vector<StateIndex> first_decision_;
  std::unordered_map<StateIndex, std::vector<TaskId>> fd_tasks_;
  std::vector<StateIndex> unsafe_;
  std::uint32_t bound_ = 0;
  std::uint32_t first_decision_distance_ = 0;
  StateIndex first_decision_end_ = 0;
  std::size_t agent_count_ = 0;
  LocationId next_decision_location_ = kNoLocation;
};

/// Number of full rounds until the avatar's next decision from s: its
/// remaining edges, plus one when the current round has already passed the
/// avatar.
template <class Payload>
std::uint32_t rounds_to_next_decision(const Arena& arena, const GlobalState<Payload>& s) {
  return static_cast<std::uint32_t>(remaining_edges(arena, s.queues.at(0)) + (s.turn > 0 ? 1 : 0));
}

/// Builds the sub-MDP rooted at an arbitrary state; the first decision
/// distance is rounds_to_next_decision(root) and the bound adds `horizon`
/// rounds. Unsafe states become absorbing sinks.
template <Dynamics D, class Unsafe>
SubMdp<typename D::Payload> build_submdp_from(const Model<D>& model, const GlobalState<typename D::Payload>& root,
                                             std::uint32_t horizon, Unsafe&& unsafe) {
  using Payload = typename D::Payload;
  using State = GlobalState<Payload>;
  using Result = SubMdp<Payload>;
  using Edge = typename Result::Edge;
  using Node = typename Result::Node;

  if (horizon == 0) throw HorizonZero("horizon must be at least 1");
  if (root.positions.size() != model.agent_count() || root.queues.size() != model.agent_count()) {
    throw std::invalid_argument("state has " + std::to_string(root.positions.size()) + " agents, model has " +
                                std::to_string(model.agent_count()));
  }

  const std::uint32_t agents = static_cast<std::uint32_t>(model.agent_count());
  const std::uint32_t fd = rounds_to_next_decision(model.arena, root);
  const std::uint32_t bound = fd + horizon;
  const std::size_t layer_count = static_cast<std::size_t>(bound + 1) * agents * 2;
  auto layer_of = [agents](const State& s, std::uint32_t d) -> std::size_t {
    return (static_cast<std::size_t>(d) * agents + s.turn) * 2 + (s.queues[s.turn].empty() ? 0 : 1);
  };
  auto full_hash = [&](const State& s, std::uint32_t d) {
    return hash_mix(hash_mix(hash_core(s), d), model.dynamics.hash(s.payload));
  };

  Result out;
  out.bound_ = bound;
  out.first_decision_distance_ = fd;
  out.agent_count_ = agents;
  out.payload_hash_ = [dyn = model.dynamics](const State& s) { return dyn.hash(s.payload); };
  out.next_decision_location_ =
      root.queues[0].empty() ? root.positions[0] : model.arena.task(root.queues[0].task).destination();

  // Discovery-order storage; nodes are expanded layer by layer, which is the
  // final (topological) order.
  std::vector<Node> pending;
  std::vector<std::vector<StateIndex>> layers(layer_count);
  std::unordered_multimap<std::size_t, StateIndex> seen;

  auto intern = [&](State&& s, std::uint32_t d) -> StateIndex {
    const std::size_t h = full_hash(s, d);
    auto [lo, hi] = seen.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      const Node& n = pending[it->second];
      if (n.distance == d && n.state == s) return it->second;
    }
    const auto idx = static_cast<StateIndex>(pending.size());
    const std::size_t layer = layer_of(s, d);
    pending.push_back(Node{std::move(s), d, NodeKind::Frontier, 0, 0, h});
    seen.emplace(h, idx);
    layers[layer].push_back(idx);
    return idx;
  };

  intern(State(root), 0);

  std::vector<StateIndex> final_of;  // discovery index -> final index
  std::vector<StateIndex> order;     // final index -> discovery index
  std::vector<Edge> edges;

  for (std::size_t layer = 0; layer < layer_count; ++layer) {
    // Expansion only appends to later layers, so this list is complete.
    for (std::size_t k = 0; k < layers[layer].size(); ++k) {
      const StateIndex idx = layers[layer][k];
      order.push_back(idx);
      const std::uint32_t d = pending[idx].distance;
      const State s = pending[idx].state;
      const bool decision = is_decision_state(s);
      if (decision && d < fd) {
        throw std::logic_error("sub-MDP contains a decision state before the first decision distance");
      }
      if (decision && d == fd) {
        out.fd_tasks_.emplace(idx, enabled_tasks(model, s, 0));
      }

      NodeKind kind;
      const auto first_edge = static_cast<std::uint32_t>(edges.size());
      if (unsafe(std::as_const(s))) {
        kind = NodeKind::Unsafe;
      } else if (d >= bound) {
        kind = NodeKind::Frontier;
      } else {
        switch (step_kind(s)) {
          case StepKind::AvatarDecision:
            kind = NodeKind::AvatarDecision;
            for (TaskId t : enabled_tasks(model, s, 0)) {
              const StateIndex target = intern(with_task<D>(s, 0, t), d);
              edges.push_back({1.0, target, t});
            }
            break;
          case StepKind::AdversaryDecision:
            kind = NodeKind::AdversaryDecision;
            for (const Outcome& o : adversary_outcomes(model, s, s.turn)) {
              const StateIndex target = intern(with_task<D>(s, s.turn, o.task), d);
              edges.push_back({o.probability, target, o.task});
            }
            break;
          case StepKind::Movement: {
            kind = NodeKind::Movement;
            const std::uint32_t next_d = s.turn + 1 == agents ? d + 1 : d;
            const StateIndex target = intern(apply_move(model, s), next_d);
            edges.push_back({1.0, target, kNoTask});
            break;
          }
        }
      }
      Node& node = pending[idx];
      node.kind = kind;
      node.first_edge = first_edge;
      node.edge_count = static_cast<std::uint32_t>(edges.size() - first_edge);
    }
  }

  // Renumber into expansion order.
  final_of.assign(pending.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) final_of[order[i]] = static_cast<StateIndex>(i);

  const std::size_t fd_layer = static_cast<std::size_t>(fd) * agents * 2;
  std::size_t before_fd_end = 0;
  for (std::size_t layer = 0; layer <= fd_layer && layer < layer_count; ++layer) before_fd_end += layers[layer].size();
  out.first_decision_end_ = static_cast<StateIndex>(before_fd_end);

  out.nodes_.reserve(order.size());
  out.edges_.reserve(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    Node& n = pending[order[i]];
    const auto first = static_cast<std::uint32_t>(out.edges_.size());
    for (std::uint32_t e = 0; e < n.edge_count; ++e) {
      Edge edge = edges[n.first_edge + e];
      edge.target = final_of[edge.target];
      out.edges_.push_back(edge);
    }
    n.first_edge = first;
    out.index_.emplace(n.hash, static_cast<StateIndex>(i));
    out.nodes_.push_back(std::move(n));
  }

  std::unordered_map<StateIndex, std::vector<TaskId>> fd_tasks;
  for (auto& [idx, tasks] : out.fd_tasks_) {
    const StateIndex fi = final_of[idx];
    fd_tasks.emplace(fi, std::move(tasks));
    out.first_decision_.push_back(fi);
  }
  out.fd_tasks_ = std::move(fd_tasks);
  std::sort(out.first_decision_.begin(), out.first_decision_.end());
  for (StateIndex i = 0; i < out.nodes_.size(); ++i) {
    if (out.nodes_[i].kind == NodeKind::Unsafe) out.unsafe_.push_back(i);
  }
  return out;
}

/// Builds the sub-MDP for the next decision from the state s_t that directly
/// follows the avatar's choice of task t. Throws NotPostDecisionState or
/// HorizonZero.
template <Dynamics D, class Unsafe>
SubMdp<typename D::Payload> build_submdp(const Model<D>& model, const GlobalState<typename D::Payload>& s_t,
                                        std::uint32_t horizon, Unsafe&& unsafe) {
  if (horizon == 0) throw HorizonZero("horizon must be at least 1");
  const TaskCursor q = s_t.queues.at(0);
  if (s_t.turn != 0 || q.empty() || q.step != 0 || model.arena.task(q.task).origin() != s_t.positions.at(0)) {
    throw NotPostDecisionState("state is not the immediate successor of an avatar decision");
  }
  return build_submdp_from(model, s_t, horizon, std::forward<Unsafe>(unsafe));
}

/// Union of the avatar tasks enabled at the first decision states, ordered by
/// task id. Throws NoFirstDecisionState when none is reachable.
template <class Payload>
std::vector<TaskId> tasks_of_first_decision(const SubMdp<Payload>& m) {
  if (m.first_decision_states().empty()) {
    throw NoFirstDecisionState("sub-MDP has no reachable first decision state");
  }
  std::vector<TaskId> out;
  for (StateIndex i : m.first_decision_states()) {
    const auto& tasks = m.first_decision_tasks(i);
    out.insert(out.end(), tasks.begin(), tasks.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// A sub-MDP in which every first decision state may only choose `task`.
/// A first decision state where `task` is not enabled keeps its own choices.
template <class Payload>
class SubMdpView {
 public:
  using Edge = typename SubMdp<Payload>::Edge;

  explicit SubMdpView(const SubMdp<Payload>& m, TaskId task = kNoTask) : m_(&m), task_(task) {}

  const SubMdp<Payload>& model() const { return *m_; }
  TaskId restricted_task() const { return task_; }

  std::span<const Edge> edges(StateIndex i) const {
    auto all = m_->edges(i);
    if (task_ == kNoTask || m_->kind(i) != NodeKind::AvatarDecision ||
        m_->distance(i) != m_->first_decision_distance()) {
      return all;
    }
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (all[k].task == task_) return all.subspan(k, 1);
    }
    return all;
  }

 private:
  const SubMdp<Payload>* m_;
  TaskId task_;
};

template <class Payload>
SubMdpView<Payload> restrict_first_decision(const SubMdp<Payload>& m, TaskId task) {
  const auto tasks = tasks_of_first_decision(m);
  if (!std::binary_search(tasks.begin(), tasks.end(), task)) {
    throw TaskNotAvailable("task " + std::to_string(task) + " is not available at the first decision");
  }
  return SubMdpView<Payload>(m, task);
}

/// Graphviz rendering for debugging: nodes labeled with distance and agent
/// positions, edges with probabilities and chosen tasks.
template <class Payload>
std::string to_dot(const SubMdp<Payload>& m, const Arena& arena) {
  std::ostringstream out;
  out << "digraph submdp {\n  rankdir=LR;\n";
  for (StateIndex i = 0; i < m.size(); ++i) {
    const auto& s = m.state(i);
    out << "  n" << i << " [label=\"d=" << m.distance(i) << " turn=" << s.turn;
    for (std::size_t a = 0; a < s.positions.size(); ++a) out << "\\n" << a << ": " << arena.describe(s.positions[a]);
    out << "\"";
    switch (m.kind(i)) {
      case NodeKind::Unsafe: out << ", style=filled, fillcolor=\"#f4a0a0\""; break;
      case NodeKind::Frontier: out << ", shape=box"; break;
      case NodeKind::AvatarDecision: out << ", shape=diamond"; break;
      default: break;
    }
    out << "];\n";
  }
  for (StateIndex i = 0; i < m.size(); ++i) {
    for (const auto& e : m.edges(i)) {
      out << "  n" << i << " -> n" << e.target << " [label=\"";
      if (e.task != kNoTask) out << "t" << e.task << " ";
      out << e.probability << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace oshield
