#pragma once

#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include "georeward/scoring.hpp"

namespace httplib {
class Server;
}

namespace georeward {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  EngineConfig engine;
};

/// HTTP/1.1 front end for ScoringEngine.
///   POST /v1/score   ScoreRequest JSON -> ScoreResponse JSON
///   GET  /v1/health  {"status": "ok", "version": ...}
/// Writes one JSON log line per scoring request to `log`.
class ScoreServer {
 public:
  explicit ScoreServer(ServiceConfig config, std::ostream& log);
  ~ScoreServer();
  ScoreServer(const ScoreServer&) = delete;
  ScoreServer& operator=(const ScoreServer&) = delete;

  /// Binds the listening socket and returns the bound port. Throws
  /// std::runtime_error when the address cannot be bound.
  int bind();
  /// Serves until stop(); requires a successful bind().
  void run();
  void stop();

 private:
  void log_request(const HandledRequest& handled, double latency_ms);

  ServiceConfig config_;
  ScoringEngine engine_;
  std::unique_ptr<httplib::Server> http_;
  std::ostream& log_;
  std::mutex log_mutex_;
};

/// Binds, serves until SIGINT or SIGTERM, and returns a process exit code
/// (0 on clean shutdown, 1 when binding fails).
int serve(const ServiceConfig& config, std::ostream& log);

}  // namespace georeward
