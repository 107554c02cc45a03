#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "greater/detector.hpp"
#include "greater/error.hpp"
#include "greater/text.hpp"

namespace greater {

struct RemoteDetectorEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8085"
  int timeout_ms = 5000;
  int max_retries = 3;   // attempts = max_retries (first try included)
  int backoff_ms = 50;   // doubled after each failed attempt
  std::string auth_header;  // optional Authorization value
};

// One wire exchange, separable from real HTTP so tests can inject failures.
struct WireResult {
  bool transport_ok = false;
  int status = 0;
  std::string body;
};

using WireTransport =
    std::function<WireResult(const RemoteDetectorEndpoint&, const std::string& request_body)>;

inline WireResult http_transport(const RemoteDetectorEndpoint& ep, const std::string& body) {
  httplib::Client client(ep.base_url);
  client.set_connection_timeout(0, ep.timeout_ms * 1000);
  client.set_read_timeout(0, ep.timeout_ms * 1000);
  httplib::Headers headers;
  if (!ep.auth_header.empty()) headers.emplace("Authorization", ep.auth_header);
  auto res = client.Post("/classify", headers, body, "application/json");
  if (!res) return {false, 0, {}};
  return {true, res->status, res->body};
}

// POST /classify with {"text": ...}; expects {"label": "mgt"|"hwt", "score": s}.
// Transport failures and 5xx responses are retried with exponential backoff up
// to the endpoint's retry limit; protocol errors are never retried. Metering
// is the caller's concern (RemoteDetectorOracle counts one query per classify
// call, not per wire attempt).
inline Verdict remote_classify_via(const WireTransport& transport,
                                   const RemoteDetectorEndpoint& ep, const std::string& text) {
  const std::string request = nlohmann::json{{"text", text}}.dump();
  const int attempts = std::max(1, ep.max_retries);
  WireResult last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && ep.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ep.backoff_ms << (attempt - 1)));
    }
    last = transport(ep, request);
    if (!last.transport_ok || last.status >= 500) continue;  // retryable
    if (last.status != 200)
      throw Error(Errc::ProtocolViolation,
                  "detector endpoint returned status " + std::to_string(last.status));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(last.body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ProtocolViolation, std::string("unparseable response: ") + e.what());
    }
    if (!j.contains("label") || !j.contains("score") || !j["label"].is_string() ||
        !j["score"].is_number())
      throw Error(Errc::ProtocolViolation, "response must carry string label and numeric score");
    const std::string label = j["label"].get<std::string>();
    const double score = j["score"].get<double>();
    if (!std::isfinite(score) || score < 0.0 || score > 1.0)
      throw Error(Errc::ScoreOutOfRange, "score " + std::to_string(score) + " outside [0, 1]");
    if (label == "mgt") return Verdict{Label::Mgt, score};
    if (label == "hwt") return Verdict{Label::Hwt, score};
    throw Error(Errc::ProtocolViolation, "unknown label in response: " + label);
  }
  throw Error(Errc::Transport, "detector endpoint unreachable after " +
                                   std::to_string(attempts) + " attempts");
}

inline Verdict remote_classify(const RemoteDetectorEndpoint& ep, const std::string& text) {
  return remote_classify_via(http_transport, ep, text);
}

class RemoteDetectorOracle : public DetectorOracle {
 public:
  explicit RemoteDetectorOracle(RemoteDetectorEndpoint ep,
                                WireTransport transport = http_transport)
      : ep_(std::move(ep)), transport_(std::move(transport)) {}

 protected:
  Verdict do_classify(const std::string& text) override {
    return remote_classify_via(transport_, ep_, text);
  }

 private:
  RemoteDetectorEndpoint ep_;
  WireTransport transport_;
};

// In-process detector endpoint wrapping a local model; test/demo helper for
// exercising the remote path (the CLI itself never serves).
class StubDetectorServer {
 public:
  StubDetectorServer(const ClassifierModel& model, const Vocabulary& vocab) {
    server_.Post("/classify", [&model, &vocab](const httplib::Request& req,
                                               httplib::Response& res) {
      try {
        const auto j = nlohmann::json::parse(req.body);
        const Verdict v = predict(j.at("text").get<std::string>(), model, vocab);
        res.set_content(nlohmann::json{{"label", v.label == Label::Mgt ? "mgt" : "hwt"},
                                       {"score", v.score}}
                            .dump(),
                        "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(Errc::Transport, "stub server could not bind a port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubDetectorServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace greater
