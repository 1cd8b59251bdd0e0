#pragma once

// In-process embedding service for tests. Answers POST /embed with hashed vectors and can be told
// to misbehave.

#include "condense/vectorize.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace condense::testing {

class StubEmbeddingServer {
 public:
  struct Behavior {
    std::size_t dimension = 384;
    std::size_t reported_dimension = 0;  // 0: same as dimension
    int extra_vectors = 0;
    int failures_before_success = 0;
    int failure_status = 503;
    int fixed_status = 0;  // non-zero: always answer with this status
  };

  StubEmbeddingServer() : StubEmbeddingServer(Behavior()) {}
  explicit StubEmbeddingServer(Behavior behavior) : behavior_(behavior) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubEmbeddingServer() {
    server_.stop();
    thread_.join();
  }

  StubEmbeddingServer(const StubEmbeddingServer&) = delete;
  StubEmbeddingServer& operator=(const StubEmbeddingServer&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t requests() const { return requests_.load(); }
  std::size_t texts_embedded() const { return texts_.load(); }
  std::string last_authorization() const {
    std::lock_guard lock(mutex_);
    return authorization_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::size_t n = ++requests_;
    {
      std::lock_guard lock(mutex_);
      authorization_ = req.get_header_value("Authorization");
    }
    if (behavior_.fixed_status != 0) {
      res.status = behavior_.fixed_status;
      res.set_content("{\"error\":\"model not found\"}", "application/json");
      return;
    }
    if (static_cast<int>(n) <= behavior_.failures_before_success) {
      res.status = behavior_.failure_status;
      res.set_content("try later", "text/plain");
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json vectors = nlohmann::json::array();
    const auto texts = body.at("texts").get<std::vector<std::string>>();
    texts_ += texts.size();
    for (const auto& text : texts) vectors.push_back(embed(text));
    for (int i = 0; i < behavior_.extra_vectors; ++i) vectors.push_back(embed("extra"));
    const std::size_t reported = behavior_.reported_dimension ? behavior_.reported_dimension : behavior_.dimension;
    res.set_content(nlohmann::json{{"dimension", reported}, {"vectors", vectors}}.dump(), "application/json");
  }

  std::vector<double> embed(const std::string& text) const {
    const std::size_t dim = behavior_.reported_dimension ? behavior_.reported_dimension : behavior_.dimension;
    DenseVector v = hashed_embed(text, dim, 17);
    if (v.norm() == 0.0) v.values[0] = 1.0;
    return v.values;
  }

  Behavior behavior_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> texts_{0};
  mutable std::mutex mutex_;
  std::string authorization_;
};

}  // namespace condense::testing
