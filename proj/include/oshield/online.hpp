#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "oshield/shield.hpp"

namespace oshield {

struct OnlineConfig {
  std::uint32_t horizon = 15;
  double delta = 1.0;
  // Upper bound for recomputations after adversary decisions; 0 = no limit.
  // A recomputation that overruns is dropped and the previous shield stays.
  std::chrono::milliseconds budget{0};
  // Compute the shield for the next decision on a worker thread while the
  // avatar executes its task.
  bool async = false;
  bool update_after_adversary = true;
};

struct OnlineStats {
  long builds = 0;          // sub-MDP constructions
  long reused_updates = 0;  // updates answered from the previous value table
  long rebuilt_updates = 0;
  long budget_misses = 0;
  double last_seconds = 0.0;
};

/// Shield bookkeeping for one running game: computes the shield for the next
/// avatar decision as soon as the avatar has committed to a task, refreshes it
/// after every adversary decision and hands it out at the decision.
template <Dynamics D, class Unsafe>
class OnlineShield {
 public:
  using Payload = typename D::Payload;
  using State = GlobalState<Payload>;
  using Analysis = ShieldAnalysis<Payload>;

  OnlineShield(const Arena& arena, D dynamics, Unsafe unsafe, OnlineConfig config)
      : arena_(&arena), dynamics_(std::move(dynamics)), unsafe_(std::move(unsafe)), config_(config) {
    make_shield(make_valuation({0}, {0.0}), config_.delta);  // validates delta
  }

  const OnlineConfig& config() const { return config_; }
  const OnlineStats& stats() const { return stats_; }

  void set_delta(double delta) {
    make_shield(make_valuation({0}, {0.0}), delta);
    config_.delta = delta;
  }

  /// The avatar just chose a task; `post_decision` is the resulting state.
  void on_avatar_decision(const State& post_decision, std::span<const AdversaryBehavior> behaviors) {
    drop_pending();
    analysis_.reset();
    valuation_.reset();
    behaviors_ = std::make_shared<const std::vector<AdversaryBehavior>>(behaviors.begin(), behaviors.end());
    auto job = [arena = arena_, behaviors = behaviors_, dynamics = dynamics_, unsafe = unsafe_,
                horizon = config_.horizon, root = post_decision]() {
      const auto start = std::chrono::steady_clock::now();
      const Model<D> model{*arena, *behaviors, dynamics};
      Timed out{analyze(model, root, horizon, unsafe), 0.0};
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    };
    ++stats_.builds;
    if (config_.async) {
      pending_ = std::async(std::launch::async, std::move(job));
    } else {
      install(job());
    }
  }

  /// An adversary has committed to a task; `observed` is the state right
  /// after that decision. Passing the current behaviors forces a rebuild when
  /// they differ from the ones the shield was computed with.
  void on_adversary_decision(const State& observed, std::span<const AdversaryBehavior> behaviors = {}) {
    if (!config_.update_after_adversary) return;
    collect();
    if (!analysis_) return;
    const auto start = std::chrono::steady_clock::now();
    auto next_behaviors = behaviors_;
    if (!behaviors.empty() && !std::equal(behaviors.begin(), behaviors.end(), behaviors_->begin(), behaviors_->end())) {
      next_behaviors = std::make_shared<const std::vector<AdversaryBehavior>>(behaviors.begin(), behaviors.end());
    }
    std::optional<TaskValuation> v;
    if (next_behaviors == behaviors_) v = revalue(*arena_, *analysis_, observed);
    std::optional<Analysis> rebuilt;
    if (!v) {
      const Model<D> model{*arena_, *next_behaviors, dynamics_};
      rebuilt = analyze(model, observed, config_.horizon, unsafe_);
      v = rebuilt->valuation;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config_.budget.count() > 0 && seconds * 1000.0 > static_cast<double>(config_.budget.count())) {
      ++stats_.budget_misses;
      return;
    }
    stats_.last_seconds = seconds;
    if (rebuilt) {
      ++stats_.rebuilt_updates;
      analysis_ = std::move(*rebuilt);
      behaviors_ = std::move(next_behaviors);
    } else {
      ++stats_.reused_updates;
    }
    valuation_ = std::move(v);
  }

  /// The shield in force at the decision state `s`. Waits for a pending
  /// computation; computes one rooted at `s` when none exists (the very first
  /// decision of a game).
  Shield shield_for(const State& s, std::span<const AdversaryBehavior> behaviors) {
    collect();
    if (!valuation_) {
      behaviors_ = std::make_shared<const std::vector<AdversaryBehavior>>(behaviors.begin(), behaviors.end());
      const auto start = std::chrono::steady_clock::now();
      const Model<D> model{*arena_, *behaviors_, dynamics_};
      analysis_ = analyze(model, s, config_.horizon, unsafe_);
      valuation_ = analysis_->valuation;
      ++stats_.builds;
      stats_.last_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return make_shield(*valuation_, config_.delta);
  }

  /// Latest valuation, if any (non-blocking; ignores a pending computation).
  const std::optional<TaskValuation>& valuation() const { return valuation_; }
  bool pending() const { return pending_.valid(); }

  /// Waits for a pending computation, if any.
  void wait() { collect(); }

  /// Installs a finished computation without blocking. True if one was
  /// installed.
  bool poll() {
    if (!pending_.valid() || pending_.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return false;
    collect();
    return true;
  }

  void reset() {
    drop_pending();
    analysis_.reset();
    valuation_.reset();
  }

 private:
  struct Timed {
    Analysis analysis;
    double seconds;
  };

  void install(Timed t) {
    stats_.last_seconds = t.seconds;
    valuation_ = t.analysis.valuation;
    analysis_ = std::move(t.analysis);
  }

  void collect() {
    if (pending_.valid()) install(pending_.get());
  }

  void drop_pending() {
    if (pending_.valid()) pending_.wait();
    pending_ = {};
  }

  const Arena* arena_;
  D dynamics_;
  Unsafe unsafe_;
  OnlineConfig config_;
  OnlineStats stats_;
  std::shared_ptr<const std::vector<AdversaryBehavior>> behaviors_;
  std::optional<Analysis> analysis_;
  std::optional<TaskValuation> valuation_;
  std::future<Timed> pending_;
};

}  // namespace oshield
