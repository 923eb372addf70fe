#include "oshield/service.hpp"

#include <algorithm>

#include <json.hpp>

#include "oshield/errors.hpp"

namespace oshield {

using nlohmann::json;

std::string_view to_string(DriveMode mode) {
  switch (mode) {
    case DriveMode::Human: return "human";
    case DriveMode::Rl: return "rl";
    case DriveMode::Random: return "random";
  }
  return "?";
}

std::optional<DriveMode> parse_drive_mode(std::string_view text) {
  if (text == "human") return DriveMode::Human;
  if (text == "rl") return DriveMode::Rl;
  if (text == "random") return DriveMode::Random;
  return std::nullopt;
}

GameService::GameService(ServiceConfig config, Sink broadcast)
    : config_(std::move(config)), broadcast_(std::move(broadcast)) {
  make_shield(make_valuation({0}, {0.0}), config_.delta);  // validates delta
  if (config_.horizon == 0) throw HorizonZero("horizon must be at least 1");
  std::lock_guard lock(mutex_);
  reset_locked(config_.seed);
}

GameService::~GameService() = default;

void GameService::set_broadcast(Sink broadcast) {
  std::lock_guard lock(mutex_);
  broadcast_ = std::move(broadcast);
}

std::string GameService::error(std::string_view code, std::string_view detail) {
  json e{{"type", "error"}, {"error", code}};
  if (!detail.empty()) e["detail"] = detail;
  return e.dump();
}

void GameService::reset_locked(std::uint64_t seed) {
  config_.seed = seed;
  shield_.reset();
  decision_shield_.reset();
  game_.emplace(SnakeGame::create(config_.map, seed, config_.snake));
  OnlineConfig oc;
  oc.horizon = config_.horizon;
  oc.delta = config_.delta;
  oc.budget = config_.budget;
  oc.async = true;
  shield_.emplace(game_->arena(), game_->dynamics(), SnakeCollision{}, oc);
  rng_.seed(seed);
  if (game_->awaiting_avatar()) enter_decision_locked();
}

void GameService::enter_decision_locked() {
  decision_shield_ = shield_->shield_for(game_->shield_state(), game_->behaviors());
}

void GameService::choose_locked(TaskId task) {
  game_->choose(task);
  decision_shield_.reset();
  if (game_->running()) shield_->on_avatar_decision(game_->shield_state(), game_->behaviors());
}

std::vector<GameService::TaskRow> GameService::rows_locked() const {
  // At a decision: the available tasks with the shield in force. Otherwise:
  // the latest valuation for the next decision, if one is known.
  std::vector<TaskId> tasks;
  std::vector<double> values;
  const TaskValuation* v = nullptr;
  if (decision_shield_) {
    v = &decision_shield_->valuation;
    for (TaskId t : game_->avatar_tasks()) {
      const auto it = std::find(v->tasks.begin(), v->tasks.end(), t);
      if (it == v->tasks.end()) continue;
      tasks.push_back(t);
      values.push_back(v->values[static_cast<std::size_t>(it - v->tasks.begin())]);
    }
  } else if (game_->running() && shield_->valuation()) {
    v = &*shield_->valuation();
    tasks = v->tasks;
    values = v->values;
  }
  std::vector<TaskRow> rows;
  if (tasks.empty()) return rows;
  const Shield s = make_shield(make_valuation(tasks, values), config_.delta);
  for (std::size_t i = 0; i < tasks.size(); ++i) rows.push_back({tasks[i], values[i], s.allows(tasks[i])});
  return rows;
}

std::string GameService::frame_locked() const {
  const Arena& arena = game_->arena();
  auto xy = [&](LocationId v) {
    const Location& l = arena.node(v);
    return json::array({l.x.value_or(0), l.y.value_or(0)});
  };
  auto cells = [&](const auto& range) {
    json out = json::array();
    for (LocationId v : range) out.push_back(xy(v));
    return out;
  };
  json tasks = json::array();
  for (const TaskRow& r : rows_locked()) {
    tasks.push_back({{"path", cells(arena.task(r.task).path)},
                     {"value", r.value},
                     {"band", to_string(risk_band(r.value))},
                     {"allowed", r.allowed}});
  }
  nlohmann::ordered_json f;
  f["type"] = "frame";
  f["tick"] = game_->tick();
  f["avatar"] = cells(game_->body(0));
  f["adversary"] = cells(game_->body(1));
  f["apples"] = {{"avatar", cells(game_->apples(0))}, {"adversary", cells(game_->apples(1))}};
  f["scores"] = {{"avatar", game_->score(0)}, {"adversary", game_->score(1)}};
  f["decision"] = decision_shield_.has_value();
  f["tasks"] = tasks;
  f["status"] = to_string(game_->status());
  return f.dump();
}

void GameService::broadcast_locked() const {
  if (broadcast_) broadcast_(frame_locked());
}

std::string GameService::frame() const {
  std::lock_guard lock(mutex_);
  return frame_locked();
}

bool GameService::paused() const {
  std::lock_guard lock(mutex_);
  return paused_;
}

bool GameService::awaiting_human() const {
  std::lock_guard lock(mutex_);
  return decision_shield_.has_value() && config_.mode == DriveMode::Human;
}

bool GameService::running() const {
  std::lock_guard lock(mutex_);
  return game_->running();
}

DriveMode GameService::mode() const {
  std::lock_guard lock(mutex_);
  return config_.mode;
}

bool GameService::tick() {
  std::lock_guard lock(mutex_);
  const bool recomputed = shield_->poll();
  if (paused_ || !game_->running()) {
    if (recomputed) broadcast_locked();
    return false;
  }
  if (decision_shield_) {
    if (config_.mode == DriveMode::Human) {
      if (recomputed) broadcast_locked();
      return false;
    }
    const std::vector<TaskRow> rows = rows_locked();
    std::vector<TaskId> allowed;
    for (const TaskRow& r : rows) {
      if (r.allowed) allowed.push_back(r.task);
    }
    if (allowed.empty()) allowed = game_->avatar_tasks();
    TaskId pick;
    if (config_.mode == DriveMode::Random) {
      pick = allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng_)];
    } else {
      std::vector<std::vector<double>> features_rows;
      for (TaskId t : allowed) features_rows.push_back(features(*game_, t, config_.weights.features));
      pick = select_task(config_.weights, allowed, features_rows, 0.0, rng_);
    }
    choose_locked(pick);
  } else {
    const SnakeEvent e = game_->step();
    if (game_->running() && e.agent == 1 && e.decided != kNoTask) {
      shield_->on_adversary_decision(game_->shield_state(), game_->behaviors());
    }
  }
  if (game_->running() && game_->awaiting_avatar()) enter_decision_locked();
  broadcast_locked();
  return true;
}

void GameService::handle(std::string_view message, const Sink& reply) {
  json cmd;
  try {
    cmd = json::parse(message);
  } catch (const json::parse_error& e) {
    reply(error("malformed", e.what()));
    return;
  }
  if (!cmd.is_object() || !cmd.contains("type") || !cmd["type"].is_string()) {
    reply(error("malformed", "expected an object with a string 'type'"));
    return;
  }
  const std::string type = cmd["type"];
  const json& args = cmd.contains("payload") && cmd["payload"].is_object() ? cmd["payload"] : cmd;

  std::lock_guard lock(mutex_);
  try {
    if (type == "choose") {
      if (!args.contains("task") || !args["task"].is_number_integer()) {
        reply(error("malformed", "choose needs an integer 'task'"));
        return;
      }
      const long index = args["task"].get<long>();
      if (!decision_shield_ || !game_->running()) {
        reply(error("not_at_decision"));
        return;
      }
      const std::vector<TaskRow> rows = rows_locked();
      if (index < 0 || static_cast<std::size_t>(index) >= rows.size()) {
        reply(json{{"type", "error"}, {"error", "no_such_task"}, {"task", index}}.dump());
        return;
      }
      if (!rows[static_cast<std::size_t>(index)].allowed) {
        reply(json{{"type", "error"}, {"error", "blocked"}, {"task", index}}.dump());
        return;
      }
      choose_locked(rows[static_cast<std::size_t>(index)].task);
      if (game_->running() && game_->awaiting_avatar()) enter_decision_locked();
    } else if (type == "set_delta") {
      if (!args.contains("delta") || !args["delta"].is_number()) {
        reply(error("malformed", "set_delta needs a number 'delta'"));
        return;
      }
      const double delta = args["delta"].get<double>();
      shield_->set_delta(delta);
      config_.delta = delta;
      if (decision_shield_) decision_shield_ = make_shield(decision_shield_->valuation, delta);
    } else if (type == "set_mode") {
      const auto mode = args.contains("mode") && args["mode"].is_string()
                            ? parse_drive_mode(args["mode"].get<std::string>())
                            : std::nullopt;
      if (!mode) {
        reply(error("bad_mode", "mode must be human, rl or random"));
        return;
      }
      config_.mode = *mode;
    } else if (type == "reset") {
      std::uint64_t seed = config_.seed;
      if (args.contains("seed")) {
        if (!args["seed"].is_number_unsigned()) {
          reply(error("malformed", "seed must be a non-negative integer"));
          return;
        }
        seed = args["seed"].get<std::uint64_t>();
      }
      reset_locked(seed);
    } else if (type == "pause") {
      paused_ = true;
    } else if (type == "resume") {
      paused_ = false;
    } else if (type == "frame") {
      reply(frame_locked());
      return;
    } else {
      reply(error("unknown_command", type));
      return;
    }
  } catch (const DeltaOutOfRange& e) {
    reply(error("bad_delta", e.what()));
    return;
  } catch (const std::exception& e) {
    reply(error("failed", e.what()));
    return;
  }
  broadcast_locked();
}

}  // namespace oshield
