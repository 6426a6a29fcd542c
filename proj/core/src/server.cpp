#include "georeward/server.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <pthread.h>
#include <sys/socket.h>
#include <thread>

#include <httplib.h>

#include "georeward/version.hpp"

namespace georeward {

ScoreServer::ScoreServer(ServiceConfig config, std::ostream& log)
    : config_(std::move(config)),
      engine_(config_.engine),
      http_(std::make_unique<httplib::Server>()),
      log_(log) {
  // The library default is SO_REUSEPORT, which lets a second instance share
  // a busy port instead of failing to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  http_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    const nlohmann::json body{{"status", "ok"}, {"version", kVersion}};
    res.set_content(body.dump(), "application/json");
  });
  http_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    const HandledRequest handled = engine_.handle(req.body);
    res.status = handled.http_status;
    res.set_content(handled.body, "application/json");
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    log_request(handled, elapsed.count());
  });
}

ScoreServer::~ScoreServer() = default;

int ScoreServer::bind() {
  if (config_.port == 0) {
    const int port = http_->bind_to_any_port(config_.host);
    if (port <= 0) throw std::runtime_error("cannot bind " + config_.host);
    config_.port = port;
    return port;
  }
  if (!http_->bind_to_port(config_.host, config_.port)) {
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  return config_.port;
}

void ScoreServer::run() { http_->listen_after_bind(); }

void ScoreServer::stop() { http_->stop(); }

void ScoreServer::log_request(const HandledRequest& handled, double latency_ms) {
  nlohmann::json line{{"status", handled.http_status}, {"latency_ms", latency_ms}};
  if (handled.request) {
    line["request_id"] = handled.request->request_id;
    line["task"] = to_string(handled.request->task);
    line["G"] = handled.request->rollouts.size();
  }
  if (handled.response) {
    line["eligible_count"] = handled.response->eligible_count;
    line["mean_reward"] = handled.response->mean;
  }
  const std::string text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard<std::mutex> lock(log_mutex_);
  log_ << text << '\n' << std::flush;
}

int serve(const ServiceConfig& config, std::ostream& log) {
  // Block the shutdown signals in every thread; a dedicated thread waits for
  // them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ScoreServer server(config, log);
  int port = 0;
  try {
    port = server.bind();
  } catch (const std::exception& e) {
    std::cerr << "georeward: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "georeward: listening on " << config.host << ':' << port << '\n';

  std::atomic<bool> signalled{false};
  std::thread waiter([&server, &signalled, signals] {
    int received = 0;
    sigwait(&signals, &received);
    signalled = true;
    server.stop();
  });
  server.run();
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace georeward
