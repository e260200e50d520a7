#include "extractkit/oracle_service.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "extractkit/errors.hpp"

namespace extractkit {

OracleServer::OracleServer(std::shared_ptr<TargetOracle> oracle, OracleServerConfig config)
    : oracle_(std::move(oracle)), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  if (!oracle_) throw ConfigError("oracle server: missing oracle");
  if (config_.delay.count() < 0) throw ConfigError("oracle server: delay must be >= 0");
  if (config_.port < 0 || config_.port > 65535) throw ConfigError("oracle server: port out of range");
  install_routes();
}

OracleServer::~OracleServer() { stop(); }

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::vector<float> parse_row(const nlohmann::json& row, std::size_t dims) {
  if (!row.is_array() || row.size() != dims) {
    throw ShapeError("expected " + std::to_string(dims) + " features");
  }
  std::vector<float> out;
  out.reserve(dims);
  for (const auto& v : row) {
    if (!v.is_number()) throw ShapeError("non-numeric feature");
    out.push_back(static_cast<float>(v.get<double>()));
  }
  return out;
}

}  // namespace

void OracleServer::install_routes() {
  server_->Post("/scan", [this](const httplib::Request& req, httplib::Response& res) {
    if (config_.delay.count() > 0) std::this_thread::sleep_for(config_.delay);
    const std::size_t dims = oracle_->dims();
    std::vector<float> rows;
    bool single = false;
    try {
      const auto j = nlohmann::json::parse(req.body);
      if (j.contains("features")) {
        single = true;
        rows = parse_row(j.at("features"), dims);
      } else if (j.contains("batch") && j.at("batch").is_array()) {
        for (const auto& r : j.at("batch")) {
          auto v = parse_row(r, dims);
          rows.insert(rows.end(), v.begin(), v.end());
        }
      } else {
        throw ShapeError("body needs \"features\" or \"batch\"");
      }
    } catch (const std::exception& e) {
      reply(res, 400, {{"error", e.what()}});
      return;
    }
    const std::uint64_t n = rows.size() / dims;
    std::uint64_t current = queries_.load();
    do {
      if (config_.max_queries && current + n > *config_.max_queries) {
        reply(res, 429, {{"error", "budget"}});
        return;
      }
    } while (!queries_.compare_exchange_weak(current, current + n));
    std::vector<std::uint8_t> labels;
    try {
      labels = oracle_->label(FeatureRows(rows.data(), n, dims));
    } catch (const std::exception& e) {
      queries_ -= n;
      reply(res, 500, {{"error", e.what()}});
      return;
    }
    if (single) {
      reply(res, 200, {{"label", labels.front()}});
    } else {
      reply(res, 200, {{"labels", labels}});
    }
  });
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    if (config_.delay.count() > 0) std::this_thread::sleep_for(config_.delay);
    reply(res, 200, {{"queries", queries_.load()}});
  });
}

void OracleServer::bind() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ <= 0) {
    throw TransportError("oracle server: cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
}

void OracleServer::start() {
  if (thread_.joinable()) return;
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("oracle server listening on {}", endpoint());
}

void OracleServer::run() {
  bind();
  spdlog::info("oracle server listening on {}", endpoint());
  server_->listen_after_bind();
}

void OracleServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string OracleServer::endpoint() const { return "http://" + config_.host + ":" + std::to_string(port_); }

}  // namespace extractkit
