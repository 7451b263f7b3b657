#pragma once

// Provider-agnostic probing: chat-completions requests with an embedded PNG,
// bounded fan-out, retries, a content-addressed response cache and a strict
// answer parser.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "viprobe/dataset.hpp"
#include "viprobe/prompts.hpp"

namespace viprobe {

// ---------------------------------------------------------------------------
// Answer parsing

enum class AnswerValue { no = 0, yes = 1, invalid = 2 };

inline const char* to_string(AnswerValue v) {
  return v == AnswerValue::yes ? "1" : v == AnswerValue::no ? "0" : "invalid";
}

inline AnswerValue answer_from_string(const std::string& s) {
  if (s == "1") return AnswerValue::yes;
  if (s == "0") return AnswerValue::no;
  return AnswerValue::invalid;
}

struct ParsedAnswer {
  AnswerValue value = AnswerValue::invalid;
  std::optional<std::string> reasons;
};

namespace parse_detail {

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

/// Content of the last <tag>...</tag> with no nested opening tag inside.
inline std::optional<std::string> last_block(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">", close = "</" + std::string(tag) + ">";
  std::optional<std::string> found;
  std::size_t pos = 0;
  while ((pos = text.find(open, pos)) != std::string_view::npos) {
    const std::size_t start = pos + open.size();
    const std::size_t end = text.find(close, start);
    if (end == std::string_view::npos) break;
    const std::size_t nested = text.find(open, start);
    if (nested != std::string_view::npos && nested < end) {
      pos = nested;
      continue;
    }
    found = std::string(text.substr(start, end - start));
    pos = end + close.size();
  }
  return found;
}

}  // namespace parse_detail

/// Never throws. Only an exact "0" or "1" (after trimming) in the last
/// well-formed answer block counts; prose outside the block is ignored.
inline ParsedAnswer parse_answer(std::string_view raw) noexcept {
  ParsedAnswer p;
  try {
    if (auto a = parse_detail::last_block(raw, "answer")) p.value = answer_from_string(parse_detail::trim(*a));
    if (auto r = parse_detail::last_block(raw, "reasons")) p.reasons = parse_detail::trim(*r);
  } catch (...) {
    p = {};
  }
  return p;
}

// ---------------------------------------------------------------------------
// Model spec and transport

struct ModelSpec {
  std::string provider = "http";  // "http" or "mock"
  std::string model;
  std::string endpoint;           // base URL; requests go to {endpoint}/chat/completions
  std::string auth_env;           // name of the env var holding the API key; empty for none
  nlohmann::json params = nlohmann::json::object();  // e.g. {"temperature": 0}; empty = provider defaults
  int max_concurrency = 4;
  double rate_limit_per_min = 0;  // 0: unlimited
  double timeout_s = 120;
  int max_attempts = 5;
  int backoff_base_ms = 500;
  int backoff_max_ms = 30000;

  void validate() const {
    if (model.empty()) throw ValidationError("model: id is required");
    if (max_concurrency < 1) throw ValidationError("model: max_concurrency must be >= 1");
    if (max_attempts < 1) throw ValidationError("model: max_attempts must be >= 1");
    if (rate_limit_per_min < 0) throw ValidationError("model: rate_limit_per_min must be >= 0");
    if (!(timeout_s > 0)) throw ValidationError("model: timeout_s must be positive");
    if (!params.is_object()) throw ValidationError("model: params must be an object");
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec m;
    try {
      m.provider = j.value("provider", m.provider);
      m.model = j.at("model").get<std::string>();
      m.endpoint = j.value("endpoint", m.endpoint);
      m.auth_env = j.value("auth_env", m.auth_env);
      if (j.contains("params")) m.params = j["params"];
      m.max_concurrency = j.value("max_concurrency", m.max_concurrency);
      m.rate_limit_per_min = j.value("rate_limit_per_min", m.rate_limit_per_min);
      m.timeout_s = j.value("timeout_s", m.timeout_s);
      m.max_attempts = j.value("max_attempts", m.max_attempts);
      m.backoff_base_ms = j.value("backoff_base_ms", m.backoff_base_ms);
      m.backoff_max_ms = j.value("backoff_max_ms", m.backoff_max_ms);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("model config: ") + e.what());
    }
    m.validate();
    return m;
  }
};

struct ChatRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  const std::string* image_png = nullptr;  // raw PNG bytes
  nlohmann::json params = nlohmann::json::object();
};

struct TransportResult {
  int status = 0;  // HTTP status; 0 when no response arrived
  std::string text;  // assistant content on success
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResult send(const ChatRequest& req) = 0;
};

inline nlohmann::json chat_body(const ChatRequest& r) {
  nlohmann::json messages = nlohmann::json::array();
  if (r.system) messages.push_back({{"role", "system"}, {"content", *r.system}});
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", r.user}});
  if (r.image_png) {
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(r.image_png->data()),
                                              r.image_png->size());
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + util::base64_encode(bytes)}}}});
  }
  messages.push_back({{"role", "user"}, {"content", content}});
  nlohmann::json body = {{"model", r.model}, {"messages", messages}};
  for (const auto& [k, v] : r.params.items()) body[k] = v;
  return body;
}

/// Chat-completions over HTTP(S).
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const ModelSpec& spec) : spec_(spec) {
    const auto scheme = spec.endpoint.find("://");
    if (scheme == std::string::npos) throw ValidationError("model: endpoint must include a scheme: " + spec.endpoint);
    const auto slash = spec.endpoint.find('/', scheme + 3);
    host_ = spec.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "" : spec.endpoint.substr(slash);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
    if (!spec.auth_env.empty()) {
      const char* key = std::getenv(spec.auth_env.c_str());
      if (!key || !*key) throw AuthError("credential env var " + spec.auth_env + " is not set");
      key_ = key;
    }
  }

  TransportResult send(const ChatRequest& req) override {
    httplib::Client cli(host_);
    const auto secs = static_cast<time_t>(spec_.timeout_s);
    const auto usecs = static_cast<time_t>((spec_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    const auto res = cli.Post(path_, headers, chat_body(req).dump(), "application/json");
    if (!res) return {0, "", "transport: " + httplib::to_string(res.error())};
    if (res->status != 200) return {res->status, "", res->body.substr(0, 500)};
    try {
      const auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return {200, content.get<std::string>(), ""};
      std::string text;  // some providers return content parts
      for (const auto& part : content)
        if (part.value("type", "") == "text") text += part.value("text", "");
      return {200, text, ""};
    } catch (const std::exception& e) {
      return {200, "", std::string("malformed response: ") + e.what()};
    }
  }

 private:
  ModelSpec spec_;
  std::string host_, path_, key_;
};

/// Spaces request starts at least 60/rate seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double per_minute) : per_minute_(per_minute) {}
  void acquire() {
    if (per_minute_ <= 0) return;
    const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / per_minute_));
    std::unique_lock lk(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + gap;
    lk.unlock();
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_minute_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

// ---------------------------------------------------------------------------
// Response log

struct RawResponse {
  std::string item_id;
  int polarity = +1;
  PromptVariant prompt_variant = PromptVariant::forward;
  std::string model;
  std::string request_hash;
  std::string raw_text;
  double latency_ms = 0;
  std::int64_t timestamp_ms = 0;
  std::string status = "ok";  // ok | failed
  int attempts = 1;
  std::string error;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"item_id", item_id},         {"polarity", polarity},
                        {"prompt_variant", to_string(prompt_variant)},
                        {"model", model},             {"request_hash", request_hash},
                        {"raw_text", raw_text},       {"latency_ms", latency_ms},
                        {"timestamp_ms", timestamp_ms}, {"status", status},
                        {"attempts", attempts}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
  static RawResponse from_json(const nlohmann::json& j) {
    RawResponse r;
    r.item_id = j.at("item_id").get<std::string>();
    r.polarity = j.at("polarity").get<int>();
    r.prompt_variant = prompt_variant_from_string(j.at("prompt_variant").get<std::string>());
    r.model = j.value("model", "");
    r.request_hash = j.at("request_hash").get<std::string>();
    r.raw_text = j.value("raw_text", "");
    r.latency_ms = j.value("latency_ms", 0.0);
    r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    r.status = j.value("status", "ok");
    r.attempts = j.value("attempts", 1);
    r.error = j.value("error", "");
    return r;
  }
};

inline bool log_order(const RawResponse& a, const RawResponse& b) {
  return std::tie(a.item_id, a.prompt_variant, a.model, a.timestamp_ms, a.request_hash) <
         std::tie(b.item_id, b.prompt_variant, b.model, b.timestamp_ms, b.request_hash);
}

inline std::vector<RawResponse> load_response_log(const fs::path& path) {
  std::vector<RawResponse> rows;
  if (!fs::exists(path)) return rows;
  std::istringstream in(util::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(RawResponse::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      // A torn final line from an interrupted run is dropped; anything else is corruption.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

/// Append-only JSONL store. Appends are serialized and flushed per row so an
/// interrupted probe resumes from what was written; finalize() rewrites the
/// file sorted.
class ResponseStore {
 public:
  explicit ResponseStore(fs::path path) : path_(std::move(path)) {
    rows_ = load_response_log(path_);
    for (const auto& r : rows_) remember(r);
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    // Drop a torn tail before appending.
    std::string text;
    for (const auto& r : rows_) text += r.to_json().dump() + "\n";
    util::write_file_atomic(path_, text);
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw Error("cannot open response log " + path_.string());
  }

  /// True when `item_id` already holds a successful row for this request.
  bool cached(const std::string& hash, const std::string& item_id) const {
    std::lock_guard lk(mu_);
    auto it = cached_.find(hash);
    return it != cached_.end() && it->second.items.count(item_id) > 0;
  }

  /// A successful row for the same request made on behalf of another item
  /// (byte-identical stimuli), if any.
  std::optional<RawResponse> cached_elsewhere(const std::string& hash) const {
    std::lock_guard lk(mu_);
    auto it = cached_.find(hash);
    if (it == cached_.end()) return std::nullopt;
    return it->second.row;
  }

  void append(const RawResponse& r) {
    std::lock_guard lk(mu_);
    out_ << r.to_json().dump() << "\n";
    out_.flush();
    rows_.push_back(r);
    remember(r);
  }

  std::vector<RawResponse> finalize() {
    std::lock_guard lk(mu_);
    out_.close();
    std::sort(rows_.begin(), rows_.end(), log_order);
    std::string text;
    for (const auto& r : rows_) text += r.to_json().dump() + "\n";
    util::write_file_atomic(path_, text);
    out_.open(path_, std::ios::app | std::ios::binary);
    return rows_;
  }

 private:
  fs::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  struct Hit {
    RawResponse row;
    std::set<std::string> items;
  };
  void remember(const RawResponse& r) {
    if (r.status != "ok") return;
    auto [it, fresh] = cached_.try_emplace(r.request_hash, Hit{r, {}});
    it->second.items.insert(r.item_id);
  }

  std::vector<RawResponse> rows_;
  std::map<std::string, Hit> cached_;
};

// ---------------------------------------------------------------------------
// Probing

struct PromptPlan {
  std::vector<PromptVariant> variants{PromptVariant::forward, PromptVariant::reverse};
  std::vector<VariantKind> kinds;  // empty: every item
  std::vector<int> cases;          // empty: every case

  bool selects(const ManifestItem& it) const {
    return (kinds.empty() || std::find(kinds.begin(), kinds.end(), it.variant_kind) != kinds.end()) &&
           (cases.empty() || std::find(cases.begin(), cases.end(), it.case_id) != cases.end());
  }

  static PromptPlan from_json(const nlohmann::json& j) {
    PromptPlan p;
    try {
      if (j.contains("variants")) {
        p.variants.clear();
        for (const auto& v : j["variants"]) p.variants.push_back(prompt_variant_from_string(v.get<std::string>()));
      }
      if (j.contains("kinds"))
        for (const auto& k : j["kinds"]) p.kinds.push_back(kind_from_string(k.get<std::string>()));
      if (j.contains("cases")) p.cases = j["cases"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("prompt plan: ") + e.what());
    }
    if (p.variants.empty()) throw ValidationError("prompt plan: no prompt variants");
    return p;
  }
};

inline std::string request_hash(const std::string& model, const std::string& image_sha256, const PromptText& prompt,
                                const nlohmann::json& params) {
  const nlohmann::json key = {{"model", model},
                              {"image", image_sha256},
                              {"system", prompt.system ? nlohmann::json(*prompt.system) : nlohmann::json()},
                              {"user", prompt.user},
                              {"params", params}};
  return util::sha256_hex(key.dump());
}

struct ProbeStats {
  std::size_t planned = 0, cached = 0, sent = 0, succeeded = 0, failed = 0, http_attempts = 0;
};

struct ProbeOptions {
  std::uint64_t jitter_seed = 0;
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// Sends one request per (item, prompt variant) not already answered in the
/// store. 401/403 abort the whole probe; 429, 5xx and transport errors retry
/// with exponential backoff; other statuses fail the row immediately.
inline ProbeStats probe(const Manifest& manifest, const ModelSpec& spec, const PromptPlan& plan, Transport& transport,
                        ResponseStore& store, const ProbeOptions& opts = {}) {
  spec.validate();
  struct Job {
    const ManifestItem* item;
    PromptVariant variant;
    PromptText prompt;
    std::string hash;
  };
  std::vector<Job> jobs;
  ProbeStats stats;
  for (const auto& it : manifest.items) {
    if (!plan.selects(it)) continue;
    for (auto v : plan.variants) {
      ++stats.planned;
      auto prompt = render_prompt(polarity(v) > 0 ? it.question_forward : it.question_reverse, is_instructional(v));
      auto hash = request_hash(spec.model, it.image_sha256, prompt, spec.params);
      if (store.cached(hash, it.item_id)) {
        ++stats.cached;
        continue;
      }
      if (auto twin = store.cached_elsewhere(hash)) {
        twin->item_id = it.item_id;
        twin->prompt_variant = v;
        twin->polarity = polarity(v);
        twin->attempts = 0;
        twin->latency_ms = 0;
        store.append(*twin);
        ++stats.cached;
        continue;
      }
      jobs.push_back({&it, v, std::move(prompt), std::move(hash)});
    }
  }

  RateLimiter limiter(spec.rate_limit_per_min);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::string auth_error;
  std::map<std::string, std::string> images;  // image_path -> bytes, loaded lazily

  auto image_bytes = [&](const ManifestItem& it) -> const std::string* {
    std::lock_guard lk(mu);
    auto found = images.find(it.image_path);
    if (found == images.end()) found = images.emplace(it.image_path, util::read_file(manifest.root / it.image_path)).first;
    return &found->second;
  };

  auto work = [&](std::size_t worker) {
    std::mt19937_64 rng(util::derive_seed(opts.jitter_seed, worker));
    for (;;) {
      if (abort) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      RawResponse row;
      row.item_id = job.item->item_id;
      row.prompt_variant = job.variant;
      row.polarity = polarity(job.variant);
      row.model = spec.model;
      row.request_hash = job.hash;
      ChatRequest req{spec.model, job.prompt.system, job.prompt.user, nullptr, spec.params};
      try {
        req.image_png = image_bytes(*job.item);
      } catch (const std::exception& e) {
        row.status = "failed";
        row.attempts = 0;
        row.error = e.what();
      }
      const auto t0 = std::chrono::steady_clock::now();
      for (int attempt = 1; req.image_png && attempt <= spec.max_attempts; ++attempt) {
        limiter.acquire();
        const auto res = transport.send(req);
        {
          std::lock_guard lk(mu);
          ++stats.http_attempts;
        }
        row.attempts = attempt;
        if (res.status == 200 && res.error.empty()) {
          row.status = "ok";
          row.raw_text = res.text;
          row.error.clear();
          break;
        }
        row.status = "failed";
        row.error = res.error.empty() ? "HTTP " + std::to_string(res.status) : res.error;
        if (res.status == 401 || res.status == 403) {
          std::lock_guard lk(mu);
          auth_error = "authentication rejected (HTTP " + std::to_string(res.status) + ")";
          abort = true;
          return;
        }
        const bool retriable = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
        if (!retriable || attempt == spec.max_attempts) break;
        const double base = std::min<double>(spec.backoff_max_ms, spec.backoff_base_ms * std::pow(2.0, attempt - 1));
        const double jitter = util::uniform_unit(rng) * base * 0.5;
        opts.sleep(std::chrono::milliseconds(static_cast<long>(base + jitter)));
      }
      row.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      row.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
      store.append(row);
      std::lock_guard lk(mu);
      ++stats.sent;
      ++(row.status == "ok" ? stats.succeeded : stats.failed);
    }
  };

  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(spec.max_concurrency), std::max<std::size_t>(1, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& t : pool) t.join();
  store.finalize();
  if (!auth_error.empty()) throw AuthError(auth_error);
  return stats;
}

}  // namespace viprobe
