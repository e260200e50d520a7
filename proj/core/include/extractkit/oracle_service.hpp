#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "extractkit/oracles.hpp"

namespace httplib {
class Server;
}

namespace extractkit {

struct OracleServerConfig {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::chrono::milliseconds delay{0};
  std::optional<std::uint64_t> max_queries;
};

// HTTP scan service:
//   POST /scan {"features":[..]} -> {"label":b}, {"batch":[[..],..]} -> {"labels":[..]}
//   GET /stats -> {"queries":n}
// Requests that would pass max_queries get 429 {"error":"budget"} and are not counted.
class OracleServer {
 public:
  OracleServer(std::shared_ptr<TargetOracle> oracle, OracleServerConfig config);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  // Binds and serves on a background thread. Throws TransportError if the
  // port cannot be bound.
  void start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }
  std::string endpoint() const;
  std::uint64_t queries() const noexcept { return queries_.load(); }

 private:
  void bind();
  void install_routes();

  std::shared_ptr<TargetOracle> oracle_;
  OracleServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> queries_{0};
  int port_ = 0;
};

}  // namespace extractkit
