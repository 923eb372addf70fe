#include "oshield/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include <json.hpp>

#include "oshield/errors.hpp"

namespace oshield {

EpisodeResult play_episode(SnakeGame& game, QFunction& q, const EpisodeOptions& options, Rng& rng) {
  EpisodeResult result;
  std::optional<SnakeShield> shield;
  if (options.shielded) shield.emplace(game.arena(), game.dynamics(), SnakeCollision{}, options.online);

  std::vector<double> last_features;
  bool has_last = false;
  double pending_reward = 0.0;

  while (game.running()) {
    if (!game.awaiting_avatar()) {
      const SnakeEvent e = game.step();
      pending_reward += e.reward;
      result.reward += e.reward;
      if (shield && e.agent == 1 && e.decided != kNoTask && game.running()) {
        shield->on_adversary_decision(game.shield_state(), game.behaviors());
      }
      continue;
    }

    std::optional<Shield> guard;
    if (shield) guard = shield->shield_for(game.shield_state(), game.behaviors());
    const auto candidates = candidate_tasks(game.avatar_tasks(), guard ? &*guard : nullptr);
    std::vector<std::vector<double>> rows;
    for (TaskId t : candidates) rows.push_back(features(game, t, q.features));

    if (options.learn && has_last) {
      double next_best = q.value(rows[0]);
      for (const auto& r : rows) next_best = std::max(next_best, q.value(r));
      q = q_update(std::move(q), last_features, pending_reward, next_best, options.learner);
    }
    pending_reward = 0.0;

    const TaskId chosen = select_task(q, candidates, rows, options.epsilon, rng);
    const auto slot = static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), chosen) -
                                               candidates.begin());
    last_features = rows[slot];
    has_last = true;
    game.choose(chosen);
    ++result.decisions;
    if (shield) shield->on_avatar_decision(game.shield_state(), game.behaviors());
  }
  if (options.learn && has_last) q = q_update(std::move(q), last_features, pending_reward, 0.0, options.learner);

  result.status = game.status();
  result.cause = game.cause();
  result.ticks = game.tick();
  if (shield) result.shield_stats = shield->stats();
  return result;
}

std::vector<SnakeState> sample_post_decision_states(const SnakeMap& map, int length, int count, std::uint64_t seed) {
  std::vector<SnakeState> out;
  SnakeConfig config;
  config.apples_per_player = 0;
  config.initial_length = length;
  config.max_ticks = 500;
  Rng rng(seed);
  for (std::uint64_t game_index = 0; static_cast<int>(out.size()) < count; ++game_index) {
    SnakeGame g = SnakeGame::create(map, seed * 7919 + game_index, config);
    while (g.running() && static_cast<int>(out.size()) < count) {
      if (g.awaiting_avatar()) {
        const auto tasks = g.avatar_tasks();
        g.choose(tasks[std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng)]);
        out.push_back(g.shield_state());
      } else {
        g.step();
      }
    }
  }
  return out;
}

std::vector<BenchRecord> bench_horizon(const BenchConfig& config) {
  if (config.samples < 1) throw std::invalid_argument("samples must be at least 1");
  const Arena& arena = *config.map.arena;
  const std::vector<AdversaryBehavior> behaviors{uniform_behavior(arena)};
  const Model<SnakeDynamics> model{arena, behaviors, SnakeDynamics{std::make_shared<AppleLayout>()}};

  std::vector<std::vector<SnakeState>> states;
  for (int l : config.lengths) states.push_back(sample_post_decision_states(config.map, l, config.samples, config.seed));

  std::vector<BenchRecord> out;
  double sink = 0.0;
  for (std::uint32_t h : config.horizons) {
    for (std::size_t li = 0; li < config.lengths.size(); ++li) {
      BenchRecord r;
      r.horizon = h;
      r.length = config.lengths[li];
      r.samples = config.samples;
      double total = 0.0;
      for (const SnakeState& s : states[li]) {
        const auto start = std::chrono::steady_clock::now();
        const auto a = analyze(model, s, h, SnakeCollision{});
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        sink += a.valuation.optimal;
        total += seconds;
        r.max_seconds = std::max(r.max_seconds, seconds);
      }
      r.mean_seconds = total / config.samples;
      out.push_back(r);
    }
  }
  if (sink < 0) out.clear();  // keeps the valuations observable
  return out;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << "h,l,mean_s,max_s,n\n";
  for (const BenchRecord& r : records) {
    out << r.horizon << ',' << r.length << ',' << r.mean_seconds << ',' << r.max_seconds << ',' << r.samples << '\n';
  }
}

std::vector<double> window_means(const std::vector<double>& values, int window) {
  std::vector<double> out;
  if (window < 1) return out;
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t start = 0; start + w <= values.size(); start += w) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + w; ++i) sum += values[i];
    out.push_back(sum / static_cast<double>(w));
  }
  return out;
}

TrainResult train(const TrainConfig& config, bool shielded) {
  config.learner.validate();
  TrainResult result;
  result.shielded = shielded;
  const int episodes = config.learner.episodes;
  result.episode_rewards.assign(static_cast<std::size_t>(episodes), 0.0);

  EpisodeOptions options;
  options.shielded = shielded;
  options.online.horizon = config.learner.horizon;
  options.online.delta = config.learner.delta;
  options.online.budget = config.budget;
  options.learner = config.learner;

  for (std::uint64_t seed : config.seeds) {
    QFunction q = QFunction::zero(config.features);
    Rng rng(seed);
    options.learn = true;
    options.epsilon = config.learner.epsilon;
    for (int ep = 0; ep < episodes; ++ep) {
      SnakeGame game = SnakeGame::create(config.map, seed * 1'000'003 + static_cast<std::uint64_t>(ep), config.snake);
      const EpisodeResult r = play_episode(game, q, options, rng);
      result.episode_rewards[static_cast<std::size_t>(ep)] += r.reward / static_cast<double>(config.seeds.size());
      result.training_collisions += r.collision() ? 1 : 0;
      result.training_wins += r.won() ? 1 : 0;
    }
    options.learn = false;
    options.epsilon = 0.0;
    for (int g = 0; g < config.eval_games; ++g) {
      SnakeGame game =
          SnakeGame::create(config.map, seed * 1'000'003 + 500'000 + static_cast<std::uint64_t>(g), config.snake);
      const EpisodeResult r = play_episode(game, q, options, rng);
      ++result.eval_games;
      result.eval_wins += r.won() ? 1 : 0;
      result.eval_collisions += r.collision() ? 1 : 0;
    }
    result.weights.push_back(std::move(q));
  }
  result.windowed = window_means(result.episode_rewards, config.window);
  return result;
}

void write_reward_csv(std::ostream& out, const TrainResult& result, int window) {
  out << "episode,mode,mean_reward_" << window << '\n';
  for (std::size_t i = 0; i < result.windowed.size(); ++i) {
    out << (i + 1) * static_cast<std::size_t>(window) << ',' << (result.shielded ? "shielded" : "unshielded") << ','
        << result.windowed[i] << '\n';
  }
}

Arena load_any_arena(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return load_arena(text);
  std::string plain(text);
  std::replace(plain.begin(), plain.end(), 'A', '.');
  std::replace(plain.begin(), plain.end(), 'E', '.');
  return gridworld_from_ascii(plain);
}

PlainState parse_plain_state(const Arena& arena, std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("state JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("agents") || !doc["agents"].is_array() || doc["agents"].empty()) {
    throw ParseError("state JSON: 'agents' must be a non-empty array");
  }
  auto location = [&](const nlohmann::json& id, const std::string& where) {
    if (!id.is_string()) throw ParseError("state JSON: " + where + " must be a node id string");
    const auto v = arena.find(id.get<std::string>());
    if (!v) throw ParseError("state JSON: " + where + " names unknown node '" + id.get<std::string>() + "'");
    return *v;
  };

  PlainState s;
  for (std::size_t i = 0; i < doc["agents"].size(); ++i) {
    const auto& a = doc["agents"][i];
    const std::string where = "agents[" + std::to_string(i) + "]";
    if (!a.is_object() || !a.contains("at")) throw ParseError("state JSON: " + where + " needs 'at'");
    const LocationId at = location(a["at"], where + ".at");
    TaskCursor q;
    if (a.contains("task") && !a["task"].is_null()) {
      if (!a["task"].is_array() || a["task"].size() < 2) {
        throw ParseError("state JSON: " + where + ".task must list at least two nodes");
      }
      std::vector<LocationId> path;
      for (const auto& id : a["task"]) path.push_back(location(id, where + ".task"));
      if (!arena.is_decision_location(path.front())) {
        throw ParseError("state JSON: " + where + ".task does not start at a decision location");
      }
      for (TaskId t : arena.tasks_at(path.front())) {
        if (arena.task(t).path == path) q.task = t;
      }
      if (q.empty()) throw ParseError("state JSON: " + where + ".task is not a task of the arena");
      const int step = a.value("step", 0);
      if (step < 0 || static_cast<std::size_t>(step) >= path.size() - 1) {
        throw ParseError("state JSON: " + where + ".step out of range");
      }
      q.step = static_cast<std::uint16_t>(step);
      if (path[q.step] != at) throw ParseError("state JSON: " + where + " is not at step " + std::to_string(step));
    }
    s.positions.push_back(at);
    s.queues.push_back(q);
  }
  const int turn = doc.value("turn", 0);
  if (turn < 0 || static_cast<std::size_t>(turn) >= s.positions.size()) throw ParseError("state JSON: turn out of range");
  s.turn = static_cast<std::uint32_t>(turn);
  return s;
}

std::string valuation_json(const Arena& arena, const Shield& shield) {
  nlohmann::ordered_json doc;
  doc["tasks"] = nlohmann::ordered_json::array();
  doc["allowed"] = nlohmann::ordered_json::array();
  const TaskValuation& v = shield.valuation;
  for (std::size_t i = 0; i < v.size(); ++i) {
    nlohmann::ordered_json t;
    t["path"] = nlohmann::ordered_json::array();
    for (LocationId loc : arena.task(v.tasks[i]).path) t["path"].push_back(arena.node(loc).id);
    t["value"] = v.values[i];
    t["band"] = std::string(to_string(risk_band(v.values[i])));
    doc["tasks"].push_back(t);
    if (shield.allows(v.tasks[i])) doc["allowed"].push_back(i);
  }
  doc["optimal"] = v.optimal;
  doc["delta"] = shield.delta;
  return doc.dump();
}

}  // namespace oshield
