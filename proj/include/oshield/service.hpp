#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "oshield/harness.hpp"

namespace oshield {

enum class DriveMode { Human, Rl, Random };
std::string_view to_string(DriveMode mode);
std::optional<DriveMode> parse_drive_mode(std::string_view text);

struct ServiceConfig {
  SnakeMap map;
  SnakeConfig snake;
  std::uint32_t horizon = 15;
  double delta = 1.0;
  std::chrono::milliseconds tick{200};
  std::uint64_t seed = 1;
  DriveMode mode = DriveMode::Human;
  QFunction weights = QFunction::zero();  // greedy policy for rl mode
  std::chrono::milliseconds budget{0};
};

/// The shared game behind the demonstrator, independent of any transport.
/// All members are safe to call from several threads; commands and ticks are
/// serialized on one mutex.
///
/// Frames go to the broadcast sink. Replies to a single client (errors) go to
/// the sink passed with the command.
///
/// Commands (flat JSON, or the same fields wrapped in "payload"):
///   {"type":"choose","task":i}      index into the frame's task list
///   {"type":"set_delta","delta":x}
///   {"type":"set_mode","mode":"human"|"rl"|"random"}
///   {"type":"reset","seed":n}       seed optional
///   {"type":"pause"} / {"type":"resume"}
///   {"type":"frame"}                current frame to the sender only
class GameService {
 public:
  using Sink = std::function<void(const std::string&)>;

  GameService(ServiceConfig config, Sink broadcast);
  ~GameService();

  void set_broadcast(Sink broadcast);

  void handle(std::string_view message, const Sink& reply);

  /// Advances the game by one event unless paused, waiting for a human
  /// choice or finished. Returns whether anything happened.
  bool tick();

  std::string frame() const;
  bool paused() const;
  bool awaiting_human() const;
  bool running() const;
  DriveMode mode() const;
  std::chrono::milliseconds tick_interval() const { return config_.tick; }

 private:
  struct TaskRow {
    TaskId task;
    double value;
    bool allowed;
  };

  void reset_locked(std::uint64_t seed);
  void enter_decision_locked();
  void choose_locked(TaskId task);
  std::vector<TaskRow> rows_locked() const;
  std::string frame_locked() const;
  void broadcast_locked() const;
  static std::string error(std::string_view code, std::string_view detail = {});

  mutable std::mutex mutex_;
  ServiceConfig config_;
  Sink broadcast_;
  std::optional<SnakeGame> game_;
  std::optional<SnakeShield> shield_;
  std::optional<Shield> decision_shield_;  // set while at an avatar decision
  Rng rng_;
  bool paused_ = false;
};

/// Runs the service over WebSocket on `port` (0 picks a free port) until
/// stop() is called. Every client gets every frame; any client may send
/// commands.
class WebSocketServer {
 public:
  explicit WebSocketServer(GameService& service, unsigned short port = 0);
  ~WebSocketServer();

  unsigned short port() const;
  /// Starts the accept loop and the game loop on background threads.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oshield
