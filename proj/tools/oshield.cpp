// Command line front end: one-shot shield queries, simulation, learning runs,
// timing sweeps and the demonstrator service.
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "oshield/errors.hpp"
#include "oshield/harness.hpp"
#include "oshield/service.hpp"

using namespace oshield;

namespace {

struct Globals {
  std::string map;
  std::uint32_t horizon = 15;
  double delta = 1.0;
  std::uint64_t seed = 1;
  std::string behavior;
  long budget_ms = 0;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes to `path`, or stdout for "" and "-".
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

const std::string& need_map(const Globals& g) {
  if (g.map.empty()) throw UsageError("--map is required");
  return g.map;
}

// "10..20" or "10,12,15"
template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const long lo = std::stol(text.substr(0, dots));
      const long hi = std::stol(text.substr(dots + 2));
      if (lo > hi) throw UsageError("empty range " + text);
      for (long v = lo; v <= hi; ++v) out.push_back(static_cast<T>(v));
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) out.push_back(static_cast<T>(std::stol(item)));
    }
  } catch (const std::logic_error&) {
    throw UsageError("bad list " + text);
  }
  if (out.empty()) throw UsageError("empty list");
  for (T v : out) {
    if (v < 1) throw UsageError("list values must be at least 1: " + text);
  }
  return out;
}

SnakeConfig snake_config(const Globals& g, const SnakeMap& map, int apples, int length) {
  SnakeConfig c;
  c.apples_per_player = apples;
  c.initial_length = length;
  if (!g.behavior.empty()) {
    c.adversary_behavior = load_behavior(*map.arena, read_file(g.behavior)).behavior;
  }
  return c;
}

OnlineConfig online_config(const Globals& g) {
  OnlineConfig c;
  c.horizon = g.horizon;
  c.delta = g.delta;
  c.budget = std::chrono::milliseconds(g.budget_ms);
  return c;
}

// Plain arena, state and behaviors for check / export-dot.
struct PlainQuery {
  Arena arena;
  PlainState state;
  std::vector<AdversaryBehavior> behaviors;
};

PlainQuery plain_query(const Globals& g, const std::string& state_path) {
  PlainQuery q{load_any_arena(read_file(need_map(g))), {}, {}};
  q.state = parse_plain_state(q.arena, read_file(state_path));
  q.behaviors.assign(q.state.positions.size() - 1, uniform_behavior(q.arena));
  if (!g.behavior.empty()) {
    LoadedBehavior b = load_behavior(q.arena, read_file(g.behavior));
    if (b.agent < 1 || static_cast<std::size_t>(b.agent) >= q.state.positions.size()) {
      throw std::runtime_error("behavior is for agent " + std::to_string(b.agent) + ", which is not an adversary");
    }
    q.behaviors[static_cast<std::size_t>(b.agent - 1)] = std::move(b.behavior);
  }
  return q;
}

bool avatar_meets_adversary(const PlainState& s) {
  return std::find(s.positions.begin() + 1, s.positions.end(), s.positions[0]) != s.positions.end();
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online shielding for multi-agent arenas"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--map", g.map, "Map file (snake ASCII map, or arena JSON for check/export-dot)");
  app.add_option("--horizon", g.horizon, "Shield horizon in rounds after the next decision")
      ->check(CLI::PositiveNumber);
  app.add_option("--delta", g.delta, "Shield threshold in [0,1]")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--behavior", g.behavior, "Adversary behavior JSON");
  app.add_option("--budget-ms", g.budget_ms, "Time budget for recomputations, 0 = none")
      ->check(CLI::NonNegativeNumber);

  std::string state_path, out_path;

  auto* check = app.add_subcommand("check", "Shield for one post-decision state (valuation JSON)");
  check->add_option("state", state_path, "State JSON")->required();

  auto* dot = app.add_subcommand("export-dot", "Sub-MDP of one state as Graphviz");
  dot->add_option("state", state_path, "State JSON")->required();
  dot->add_option("-o,--out", out_path, "Output file (default stdout)");

  int episodes = 10, apples = 5, length = 4;
  bool shielded = false;
  double epsilon = 1.0;
  std::string weights_path;
  auto* sim = app.add_subcommand("simulate", "Play episodes and print one CSV line per episode");
  sim->add_option("--episodes", episodes)->check(CLI::NonNegativeNumber);
  sim->add_flag("--shield,!--no-shield", shielded, "Filter choices through the shield");
  sim->add_option("--epsilon", epsilon, "Exploration rate (1 = random avatar)")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--weights", weights_path, "Q weights JSON for the greedy part");
  sim->add_option("--apples", apples)->check(CLI::PositiveNumber);
  sim->add_option("--length", length)->check(CLI::PositiveNumber);

  TrainConfig tc;
  int seed_count = 3;
  std::string weights_out;
  auto* tr = app.add_subcommand("train", "Q-learning run; reward CSV to --out");
  tr->add_option("--episodes", tc.learner.episodes)->check(CLI::NonNegativeNumber);
  tr->add_flag("--shield,!--no-shield", shielded);
  tr->add_option("--seeds", seed_count, "Number of seeds, starting at --seed")->check(CLI::PositiveNumber);
  tr->add_option("--eval-games", tc.eval_games)->check(CLI::NonNegativeNumber);
  tr->add_option("--alpha", tc.learner.alpha)->check(CLI::Range(0.0, 1.0));
  tr->add_option("--gamma", tc.learner.gamma)->check(CLI::Range(0.0, 1.0));
  tr->add_option("--epsilon", tc.learner.epsilon)->check(CLI::Range(0.0, 1.0));
  tr->add_option("--apples", apples)->check(CLI::PositiveNumber);
  tr->add_option("--length", length)->check(CLI::PositiveNumber);
  tr->add_option("-o,--out", out_path, "Reward CSV (default stdout)");
  tr->add_option("--weights-out", weights_out, "Weights JSON of the first seed");

  std::string horizons = "10..20", lengths = "10,15";
  int samples = 200;
  auto* bench = app.add_subcommand("bench", "Shield computation time against horizon; CSV to --out");
  bench->add_option("--horizons", horizons, "Range a..b or list");
  bench->add_option("--lengths", lengths, "Snake lengths, list");
  bench->add_option("--samples", samples)->check(CLI::PositiveNumber);
  bench->add_option("-o,--out", out_path);

  unsigned short port = 8080;
  long tick_ms = 200;
  std::string mode = "human";
  auto* serve = app.add_subcommand("serve", "Run the demonstrator service over WebSocket");
  serve->add_option("--port", port);
  serve->add_option("--tick-ms", tick_ms)->check(CLI::PositiveNumber);
  serve->add_option("--mode", mode)->check(CLI::IsMember({"human", "rl", "random"}));
  serve->add_option("--weights", weights_path, "Q weights JSON for rl mode");
  serve->add_option("--apples", apples)->check(CLI::PositiveNumber);
  serve->add_option("--length", length)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*check || *dot) {
      const PlainQuery q = plain_query(g, state_path);
      const Model<PlainDynamics> model{q.arena, q.behaviors, {}};
      if (*check) {
        const auto a = analyze(model, q.state, g.horizon, avatar_meets_adversary);
        std::cout << valuation_json(q.arena, make_shield(a.valuation, g.delta)) << "\n";
      } else {
        write_output(out_path, to_dot(build_submdp_from(model, q.state, g.horizon, avatar_meets_adversary), q.arena));
      }
    } else if (*sim) {
      const SnakeMap map = load_snake_map(need_map(g));
      const SnakeConfig sc = snake_config(g, map, apples, length);
      QFunction q = weights_path.empty() ? QFunction::zero() : load_weights(read_file(weights_path));
      EpisodeOptions options;
      options.shielded = shielded;
      options.online = online_config(g);
      options.epsilon = epsilon;
      Rng rng(g.seed);
      std::cout << "episode,status,cause,reward,ticks,decisions\n";
      for (int i = 0; i < episodes; ++i) {
        SnakeGame game = SnakeGame::create(map, g.seed * 1'000'003 + static_cast<std::uint64_t>(i), sc);
        const EpisodeResult r = play_episode(game, q, options, rng);
        std::cout << i << ',' << to_string(r.status) << ',' << to_string(r.cause) << ',' << r.reward << ','
                  << r.ticks << ',' << r.decisions << "\n";
      }
    } else if (*tr) {
      tc.map = load_snake_map(need_map(g));
      tc.snake = snake_config(g, tc.map, apples, length);
      tc.learner.horizon = g.horizon;
      tc.learner.delta = g.delta;
      tc.budget = std::chrono::milliseconds(g.budget_ms);
      tc.seeds.clear();
      for (int i = 0; i < seed_count; ++i) tc.seeds.push_back(g.seed + static_cast<std::uint64_t>(i));
      const TrainResult r = train(tc, shielded);
      std::ostringstream csv;
      write_reward_csv(csv, r, tc.window);
      write_output(out_path, csv.str());
      if (!weights_out.empty()) write_output(weights_out, save_weights(r.weights.front()) + "\n");
      std::cerr << (shielded ? "shielded" : "unshielded") << ": training collisions " << r.training_collisions
                << ", training wins " << r.training_wins << ", evaluation wins " << r.eval_wins << "/" << r.eval_games
                << ", evaluation collisions " << r.eval_collisions << "\n";
    } else if (*bench) {
      BenchConfig bc;
      bc.map = load_snake_map(need_map(g));
      bc.horizons = parse_list<std::uint32_t>(horizons);
      bc.lengths = parse_list<int>(lengths);
      bc.samples = samples;
      bc.seed = g.seed;
      std::ostringstream csv;
      write_bench_csv(csv, bench_horizon(bc));
      write_output(out_path, csv.str());
    } else if (*serve) {
      ServiceConfig c;
      c.map = load_snake_map(need_map(g));
      c.snake = snake_config(g, c.map, apples, length);
      c.horizon = g.horizon;
      c.delta = g.delta;
      c.tick = std::chrono::milliseconds(tick_ms);
      c.seed = g.seed;
      c.mode = *parse_drive_mode(mode);
      c.budget = std::chrono::milliseconds(g.budget_ms);
      if (!weights_path.empty()) c.weights = load_weights(read_file(weights_path));
      GameService service(c, nullptr);
      WebSocketServer server(service, port);
      server.start();
      std::cerr << "listening on ws://0.0.0.0:" << server.port() << "/\n";
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
