#include "extractkit/oracles.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "extractkit/data.hpp"
#include "extractkit/errors.hpp"

namespace extractkit {

FeatureRows::FeatureRows(std::span<const float> flat, std::size_t c)
    : data(flat.data()), rows(c == 0 ? 0 : flat.size() / c), cols(c) {
  if (c == 0 || flat.size() % c != 0) throw ShapeError("feature rows: buffer is not a whole number of rows");
}

FeatureRows::FeatureRows(const DatasetMatrix& m) : data(m.features.data()), rows(m.n), cols(m.d) {}

std::vector<float> gather_rows(const DatasetMatrix& m, std::span<const std::size_t> rows) {
  std::vector<float> out;
  out.reserve(rows.size() * m.d);
  for (std::size_t r : rows) {
    if (r >= m.n) throw ShapeError("gather_rows: row out of range");
    const auto src = m.row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return out;
}

std::vector<std::uint8_t> TargetOracle::label(const FeatureRows& x) {
  if (x.rows == 0) return {};
  if (x.cols != dims()) {
    throw ShapeError("oracle: expected " + std::to_string(dims()) + " features, got " + std::to_string(x.cols));
  }
  auto labels = label_rows(x);
  if (!self_counting_) queries_ += labels.size();
  return labels;
}

std::uint8_t TargetOracle::label_one(std::span<const float> x) {
  return label(FeatureRows(x.data(), 1, x.size())).front();
}

std::vector<std::uint8_t> TargetOracle::label_rows(const FeatureRows& x) {
  std::vector<std::uint8_t> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = classify(x.row(i));
  return out;
}

LinearScorer::LinearScorer(Vector weights, double bias) : weights_(std::move(weights)), bias_(bias) {
  if (weights_.size() == 0) throw ConfigError("linear scorer: empty weight vector");
  require_finite(std::span<const double>(weights_.data(), static_cast<std::size_t>(weights_.size())), "linear scorer");
}

std::vector<double> LinearScorer::score(const FeatureRows& x) const {
  if (x.cols != dims()) throw ShapeError("linear scorer: dimension mismatch");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto r = x.row(i);
    double z = bias_;
    for (std::size_t j = 0; j < r.size(); ++j) z += weights_[static_cast<Eigen::Index>(j)] * r[j];
    out[i] = sigmoid(z);
  }
  return out;
}

SurrogateScorer::SurrogateScorer(SurrogateModel model, int assumed_label)
    : model_(std::move(model)), assumed_label_(assumed_label) {
  if (assumed_label != 0 && assumed_label != 1) throw ConfigError("surrogate scorer: label must be 0 or 1");
}

std::vector<double> SurrogateScorer::score(const FeatureRows& x) const {
  if (x.cols != dims()) throw ShapeError("surrogate scorer: dimension mismatch");
  Matrix m(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols));
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  Vector y;
  const Vector* yp = nullptr;
  if (model_.needs_true_label()) {
    y = Vector::Constant(m.rows(), assumed_label_);
    yp = &y;
  }
  const Vector s = score_raw(model_, m, yp);
  return {s.data(), s.data() + s.size()};
}

NnTarget::NnTarget(std::shared_ptr<const Scorer> scorer, double threshold)
    : scorer_(std::move(scorer)), threshold_(threshold) {
  if (!scorer_) throw ConfigError("nn target: missing scorer");
  if (!std::isfinite(threshold)) throw ConfigError("nn target: threshold must be finite");
}

std::vector<std::uint8_t> NnTarget::label_rows(const FeatureRows& x) {
  const auto scores = scorer_->score(x);
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold_ ? 1 : 0;
  return out;
}

std::uint8_t NnTarget::classify(std::span<const float> x) const {
  return scorer_->score(FeatureRows(x.data(), 1, x.size())).front() >= threshold_ ? 1 : 0;
}

RemoteOracle::RemoteOracle(std::string endpoint, std::size_t dims, RemoteOracleConfig config)
    : TargetOracle(true), endpoint_(std::move(endpoint)), dims_(dims), config_(config) {
  if (endpoint_.empty()) throw ConfigError("remote oracle: empty endpoint");
  if (config_.chunk_size == 0) throw ConfigError("remote oracle: chunk size must be >= 1");
  if (endpoint_.find("://") == std::string::npos) endpoint_ = "http://" + endpoint_;
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

RemoteOracle::~RemoteOracle() = default;

namespace {

httplib::Client make_client(const std::string& endpoint, std::chrono::milliseconds timeout) {
  httplib::Client cli(endpoint);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

}  // namespace

std::string RemoteOracle::post(const std::string& body) const {
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.retry_backoff * static_cast<int>(attempt));
    auto cli = make_client(endpoint_, config_.timeout);
    auto res = cli.Post("/scan", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429) throw BudgetError("remote oracle: server refused the query (budget cap reached)");
    if (res->status != 200) {
      throw TransportError("remote oracle: HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return res->body;
  }
  throw TransportError("remote oracle: " + endpoint_ + " unreachable after " + std::to_string(config_.retries) +
                       " retries (" + last_error + ")");
}

namespace {

std::uint8_t parse_label(const nlohmann::json& v) {
  const int label = v.get<int>();
  if (label != 0 && label != 1) throw TransportError("remote oracle: non-binary label in response");
  return static_cast<std::uint8_t>(label);
}

}  // namespace

std::vector<std::uint8_t> RemoteOracle::label_rows(const FeatureRows& x) {
  std::vector<std::uint8_t> out;
  out.reserve(x.rows);
  for (std::size_t first = 0; first < x.rows; first += config_.chunk_size) {
    const std::size_t count = std::min(config_.chunk_size, x.rows - first);
    nlohmann::json batch = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i) {
      const auto r = x.row(first + i);
      batch.push_back(std::vector<double>(r.begin(), r.end()));
    }
    const std::string body = post(nlohmann::json{{"batch", std::move(batch)}}.dump());
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& labels = j.at("labels");
      if (labels.size() != count) throw TransportError("remote oracle: label count mismatch");
      for (const auto& v : labels) out.push_back(parse_label(v));
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("remote oracle: malformed response: ") + e.what());
    }
    add_queries(count);
  }
  return out;
}

std::uint8_t RemoteOracle::classify(std::span<const float> x) const {
  const std::string body =
      post(nlohmann::json{{"features", std::vector<double>(x.begin(), x.end())}}.dump());
  try {
    return parse_label(nlohmann::json::parse(body).at("label"));
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("remote oracle: malformed response: ") + e.what());
  }
}

std::uint64_t RemoteOracle::server_queries() const {
  auto cli = make_client(endpoint_, config_.timeout);
  auto res = cli.Get("/stats");
  if (!res || res->status != 200) throw TransportError("remote oracle: GET /stats failed");
  try {
    return nlohmann::json::parse(res->body).at("queries").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("remote oracle: malformed stats: ") + e.what());
  }
}

}  // namespace extractkit
