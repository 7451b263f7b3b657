#pragma once

// Local stand-in for a chat-completions endpoint. It recognises the stimulus
// by the SHA-256 of the embedded PNG and the polarity by the question text,
// then answers according to a scripted behaviour.

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "viprobe/dataset.hpp"
#include "viprobe/gateway.hpp"

namespace viprobe {

enum class MockBehavior {
  template_answer,  // the classic label whenever inducers are drawn; controls answered from the image
  oracle,           // always the ground truth
  noisy_perceiver,  // ground truth iff |alpha| > threshold, else the classic label
};

inline const char* to_string(MockBehavior b) {
  switch (b) {
    case MockBehavior::template_answer: return "template";
    case MockBehavior::oracle: return "oracle";
    case MockBehavior::noisy_perceiver: return "noisy";
  }
  return "?";
}

inline MockBehavior mock_behavior_from_string(const std::string& s) {
  for (auto b : {MockBehavior::template_answer, MockBehavior::oracle, MockBehavior::noisy_perceiver})
    if (s == to_string(b)) return b;
  throw ValidationError("unknown mock behavior: " + s);
}

struct MockConfig {
  MockBehavior behavior = MockBehavior::oracle;
  double threshold = 0.5;     // noisy perceiver
  int fail_first = 0;         // 503 for the first n calls of each distinct request
  int fail_status = 503;
  bool reject_auth = false;   // 401 on every call
  int delay_ms = 0;
  std::string expected_key;   // when set, Authorization must be "Bearer <key>"

  static MockConfig from_json(const nlohmann::json& j) {
    MockConfig c;
    c.behavior = mock_behavior_from_string(j.value("behavior", std::string("oracle")));
    c.threshold = j.value("threshold", c.threshold);
    c.fail_first = j.value("fail_first", c.fail_first);
    c.fail_status = j.value("fail_status", c.fail_status);
    c.reject_auth = j.value("reject_auth", c.reject_auth);
    c.delay_ms = j.value("delay_ms", c.delay_ms);
    c.expected_key = j.value("expected_key", c.expected_key);
    return c;
  }
};

/// Decides the mock's answer for one (item, polarity).
inline int mock_answer(const MockConfig& cfg, const ManifestItem& item, int polarity,
                       const Catalog& catalog = Catalog::builtin()) {
  const int classic = item.variant_kind == VariantKind::IND ? catalog.at(item.case_id).inducer_only_label
                                                             : catalog.at(item.case_id).classic_forward_label;
  int forward = item.ground_truth.y_forward;
  switch (cfg.behavior) {
    case MockBehavior::template_answer:
      if (!is_control(item.variant_kind)) forward = classic;
      break;
    case MockBehavior::oracle: break;
    case MockBehavior::noisy_perceiver:
      if (!(std::abs(item.alpha) > cfg.threshold)) forward = classic;
      break;
  }
  return polarity > 0 ? forward : 1 - forward;
}

class MockServer {
 public:
  MockServer(const Manifest& manifest, MockConfig cfg, const Catalog& catalog = Catalog::builtin())
      : cfg_(std::move(cfg)), catalog_(catalog) {
    for (const auto& it : manifest.items) by_image_.emplace(it.image_sha256, it);
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
    server_.Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
  }
  ~MockServer() { stop(); }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds 127.0.0.1 (port 0 picks a free one) and serves on a background thread.
  int start(int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port("127.0.0.1") : (server_.bind_to_port("127.0.0.1", port) ? port : -1);
    if (port_ < 0) throw TransportError("mock: cannot bind port " + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  /// Blocks serving on the calling thread.
  void serve(int port) {
    if (!server_.bind_to_port("127.0.0.1", port)) throw TransportError("mock: cannot bind port " + std::to_string(port));
    port_ = port;
    server_.listen_after_bind();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int max_in_flight() const { return max_in_flight_.load(); }
  int total_calls() const { return calls_.load(); }
  int answered() const { return answered_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight_;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    ++calls_;
    struct Leave {
      std::atomic<int>& n;
      ~Leave() { --n; }
    } leave{in_flight_};
    if (cfg_.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.delay_ms));

    if (cfg_.reject_auth ||
        (!cfg_.expected_key.empty() && req.get_header_value("Authorization") != "Bearer " + cfg_.expected_key)) {
      return error(res, 401, "unauthorized");
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (...) {
      return error(res, 400, "invalid JSON");
    }
    if (cfg_.fail_first > 0) {
      std::lock_guard lk(mu_);
      if (attempts_[req.body]++ < cfg_.fail_first) return error(res, cfg_.fail_status, "scripted failure");
    }

    std::string question, image_hash;
    try {
      for (const auto& m : body.at("messages")) {
        if (m.at("role") != "user") continue;
        for (const auto& part : m.at("content")) {
          if (part.at("type") == "text") question = part.at("text").get<std::string>();
          if (part.at("type") == "image_url") {
            const auto url = part.at("image_url").at("url").get<std::string>();
            const auto comma = url.find(',');
            const auto bytes = util::base64_decode(std::string_view(url).substr(comma + 1));
            image_hash = util::sha256_hex(std::span<const std::uint8_t>(bytes));
          }
        }
      }
    } catch (const std::exception& e) {
      return error(res, 400, std::string("malformed request: ") + e.what());
    }
    const auto found = by_image_.find(image_hash);
    if (found == by_image_.end()) return error(res, 400, "unknown image");
    const ManifestItem& item = found->second;
    const std::string first_line = question.substr(0, question.find('\n'));
    int pol;
    if (first_line == item.question_forward) pol = +1;
    else if (first_line == item.question_reverse) pol = -1;
    else return error(res, 400, "question does not match the item");

    const int a = mock_answer(cfg_, item, pol, catalog_);
    ++answered_;
    const std::string text = "<reasons>Scripted " + std::string(to_string(cfg_.behavior)) +
                             " response.</reasons>\n<answer>" + std::to_string(a) + "</answer>";
    const nlohmann::json out = {
        {"id", "mock-" + item.item_id},
        {"object", "chat.completion"},
        {"model", body.value("model", "")},
        {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}}};
    res.set_content(out.dump(), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", {{"message", msg}}}}.dump(), "application/json");
  }

  MockConfig cfg_;
  const Catalog& catalog_;
  std::map<std::string, ManifestItem> by_image_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<int> in_flight_{0}, max_in_flight_{0}, calls_{0}, answered_{0};
  std::mutex mu_;
  std::map<std::string, int> attempts_;
};

}  // namespace viprobe
