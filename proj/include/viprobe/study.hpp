#pragma once

// Human-baseline study backend: seeded trial orders over a manifest slice,
// same/different judgments persisted to an append-only journal (fsync before
// ack), and detection-rate export for the threshold estimator.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "viprobe/dataset.hpp"

namespace viprobe {

struct SliceSpec {
  std::vector<VariantKind> kinds;  // empty: all
  std::vector<int> cases;          // empty: all
  std::vector<double> alphas;      // empty: all
  std::size_t limit = 0;           // 0: no cap (first `limit` items by id)
  bool reverse_trials = false;     // also present each item with the reverse question

  bool selects(const ManifestItem& it) const {
    auto has = [](const auto& v, const auto& x) { return v.empty() || std::find(v.begin(), v.end(), x) != v.end(); };
    return has(kinds, it.variant_kind) && has(cases, it.case_id) && has(alphas, it.alpha);
  }

  nlohmann::json to_json() const {
    nlohmann::json k = nlohmann::json::array();
    for (auto v : kinds) k.push_back(to_string(v));
    return {{"kinds", k}, {"cases", cases}, {"alphas", alphas}, {"limit", limit}, {"reverse_trials", reverse_trials}};
  }
  static SliceSpec from_json(const nlohmann::json& j) {
    SliceSpec s;
    try {
      if (j.contains("kinds"))
        for (const auto& k : j["kinds"]) s.kinds.push_back(kind_from_string(k.get<std::string>()));
      if (j.contains("cases")) s.cases = j["cases"].get<std::vector<int>>();
      if (j.contains("alphas")) s.alphas = j["alphas"].get<std::vector<double>>();
      s.limit = j.value("limit", std::size_t{0});
      s.reverse_trials = j.value("reverse_trials", false);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("slice: ") + e.what());
    }
    return s;
  }
};

struct StudySession {
  std::string session_id;
  std::string participant;
  SliceSpec slice;
  std::uint64_t seed = 0;
  std::vector<std::string> order;  // trial ids
  std::size_t cursor = 0;
  std::int64_t created_ms = 0;
};

enum class HumanAnswer { same, different };

inline HumanAnswer human_answer_from_string(const std::string& s) {
  if (s == "same") return HumanAnswer::same;
  if (s == "different") return HumanAnswer::different;
  throw ValidationError("answer must be 'same' or 'different'");
}
inline const char* to_string(HumanAnswer a) { return a == HumanAnswer::same ? "same" : "different"; }

/// Trial ids are item ids for forward trials and "<item_id>~r" for reverse ones.
inline std::string trial_id(const std::string& item_id, int polarity) {
  return polarity > 0 ? item_id : item_id + "~r";
}
inline std::pair<std::string, int> split_trial_id(const std::string& trial) {
  if (trial.size() > 2 && trial.compare(trial.size() - 2, 2, "~r") == 0) return {trial.substr(0, trial.size() - 2), -1};
  return {trial, +1};
}

struct JudgmentRecord {
  std::string session_id;
  std::string item_id;
  int polarity = +1;
  double alpha = 0;
  HumanAnswer answer = HumanAnswer::same;
  double latency_ms = 0;
  std::int64_t timestamp_ms = 0;
};

/// "same" is read as yes to the question shown.
inline bool judgment_correct(HumanAnswer a, const GroundTruth& t, int polarity = +1) {
  return (a == HumanAnswer::same) == ((polarity > 0 ? t.y_forward : t.y_reverse) == 1);
}

struct ExportFilter {
  std::vector<std::string> sessions;
  std::vector<std::string> participants;
  std::vector<int> cases;
  std::vector<Category> categories;
};

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

class StudyService {
 public:
  StudyService(Manifest manifest, std::filesystem::path journal)
      : manifest_(std::move(manifest)), journal_(std::move(journal)) {
    replay();
    fd_ = ::open(journal_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd_ < 0) throw Error("cannot open study journal " + journal_.string());
  }
  ~StudyService() {
    if (fd_ >= 0) ::close(fd_);
  }
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  const Manifest& manifest() const { return manifest_; }

  std::string create_session(const SliceSpec& slice, std::uint64_t seed, const std::string& participant = {}) {
    std::vector<std::string> ids;
    for (const auto& it : manifest_.items)
      if (slice.selects(it)) ids.push_back(it.item_id);
    if (slice.limit > 0 && ids.size() > slice.limit) ids.resize(slice.limit);
    if (ids.empty()) throw ValidationError("study: slice selects no items");
    if (slice.reverse_trials) {
      const auto n = ids.size();
      for (std::size_t i = 0; i < n; ++i) ids.push_back(trial_id(ids[i], -1));
    }
    std::mt19937_64 rng(seed);
    util::shuffle(ids, rng);

    StudySession s;
    s.session_id = fresh_id();
    s.participant = participant;
    s.slice = slice;
    s.seed = seed;
    s.order = std::move(ids);
    s.created_ms = now_ms();
    std::unique_lock lk(mu_);
    append({{"type", "session"},
            {"session_id", s.session_id},
            {"participant", s.participant},
            {"slice", s.slice.to_json()},
            {"seed", s.seed},
            {"order", s.order},
            {"created_ms", s.created_ms}});
    const auto id = s.session_id;
    sessions_.emplace(id, std::move(s));
    return id;
  }

  std::optional<StudySession> session(const std::string& id) const {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? std::nullopt : std::optional<StudySession>(it->second);
  }

  /// Presentation fields only; labels and variant kinds never leave the server.
  nlohmann::json next_trial(const std::string& session_id) const {
    std::shared_lock lk(mu_);
    const auto& s = get(session_id);
    if (s.cursor >= s.order.size()) return {{"done", true}, {"total", s.order.size()}};
    const auto [item_id, pol] = split_trial_id(s.order[s.cursor]);
    const auto* item = manifest_.find(item_id);
    return {{"done", false},
            {"session_id", s.session_id},
            {"trial_index", s.cursor + 1},
            {"total", s.order.size()},
            {"trial_id", s.order[s.cursor]},
            {"item_id", item->item_id},
            {"image_url", "/stimuli/" + item->item_id + ".png"},
            {"question", pol > 0 ? item->question_forward : item->question_reverse}};
  }

  enum class SubmitResult { accepted, duplicate };

  /// Persists before returning. Resubmitting a judged trial is a no-op; any
  /// other trial than the current one is rejected.
  SubmitResult submit_judgment(const std::string& session_id, const std::string& trial, HumanAnswer answer,
                               double latency_ms) {
    std::unique_lock lk(mu_);
    auto& s = get(session_id);
    if (judged_.count({session_id, trial})) return SubmitResult::duplicate;
    if (s.cursor >= s.order.size()) throw ValidationError("study: session already complete");
    if (s.order[s.cursor] != trial) throw std::out_of_range("study: item " + trial + " is not the current trial");
    if (!(latency_ms >= 0) || !std::isfinite(latency_ms)) throw ValidationError("study: latency must be >= 0");
    const auto [item_id, pol] = split_trial_id(trial);
    JudgmentRecord r{session_id, item_id, pol, manifest_.find(item_id)->alpha, answer, latency_ms, now_ms()};
    append({{"type", "judgment"},
            {"session_id", r.session_id},
            {"item_id", r.item_id},
            {"polarity", r.polarity},
            {"alpha", r.alpha},
            {"answer", to_string(r.answer)},
            {"latency_ms", r.latency_ms},
            {"timestamp_ms", r.timestamp_ms}});
    apply(r);
    return SubmitResult::accepted;
  }

  std::vector<JudgmentRecord> judgments() const {
    std::shared_lock lk(mu_);
    return records_;
  }

  /// Per signed alpha, the share of judgments matching physical ground truth.
  std::map<double, double> export_detection_rates(const ExportFilter& f = {}) const {
    std::shared_lock lk(mu_);
    std::map<double, std::pair<int, int>> tally;
    auto has = [](const auto& v, const auto& x) { return v.empty() || std::find(v.begin(), v.end(), x) != v.end(); };
    for (const auto& r : records_) {
      const auto* item = manifest_.find(r.item_id);
      if (!item) continue;
      const auto& s = sessions_.at(r.session_id);
      if (!has(f.sessions, r.session_id) || !has(f.participants, s.participant) || !has(f.cases, item->case_id) ||
          !has(f.categories, item->category))
        continue;
      auto& t = tally[item->alpha];
      t.first += judgment_correct(r.answer, item->ground_truth, r.polarity) ? 1 : 0;
      ++t.second;
    }
    std::map<double, double> rates;
    for (auto [a, t] : tally) rates[a] = static_cast<double>(t.first) / t.second;
    return rates;
  }

  /// Rewrites the journal as one snapshot of current state.
  void compact() {
    std::unique_lock lk(mu_);
    std::string text;
    for (const auto& [id, s] : sessions_)
      text += nlohmann::json{{"type", "session"},
                             {"session_id", s.session_id},
                             {"participant", s.participant},
                             {"slice", s.slice.to_json()},
                             {"seed", s.seed},
                             {"order", s.order},
                             {"created_ms", s.created_ms}}
                  .dump() +
              "\n";
    for (const auto& r : records_)
      text += nlohmann::json{{"type", "judgment"},
                             {"session_id", r.session_id},
                             {"item_id", r.item_id},
                             {"polarity", r.polarity},
                             {"alpha", r.alpha},
                             {"answer", to_string(r.answer)},
                             {"latency_ms", r.latency_ms},
                             {"timestamp_ms", r.timestamp_ms}}
                  .dump() +
              "\n";
    ::close(fd_);
    util::write_file_atomic(journal_, text);
    fd_ = ::open(journal_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd_ < 0) throw Error("cannot reopen study journal");
  }

 private:
  StudySession& get(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw std::out_of_range("study: unknown session " + id);
    return it->second;
  }
  const StudySession& get(const std::string& id) const { return const_cast<StudyService*>(this)->get(id); }

  static std::string fresh_id() {
    std::random_device rd;
    std::uint64_t a = (static_cast<std::uint64_t>(rd()) << 32) ^ rd(), b = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a), static_cast<unsigned long long>(b));
    return buf;
  }

  void append(const nlohmann::json& event) {
    const std::string line = event.dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      const auto n = ::write(fd_, line.data() + off, line.size() - off);
      if (n < 0) throw Error("study journal write failed");
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error("study journal fsync failed");
  }

  void apply(const JudgmentRecord& r) {
    auto it = sessions_.find(r.session_id);
    if (it == sessions_.end() || !judged_.insert({r.session_id, trial_id(r.item_id, r.polarity)}).second) return;
    records_.push_back(r);
    ++it->second.cursor;
  }

  void replay() {
    if (!std::filesystem::exists(journal_)) return;
    std::istringstream in(util::read_file(journal_));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json e;
      try {
        e = nlohmann::json::parse(line);
      } catch (...) {
        break;  // torn tail from a crash mid-write; never acknowledged
      }
      if (e.at("type") == "session") {
        StudySession s;
        s.session_id = e.at("session_id");
        s.participant = e.value("participant", "");
        s.slice = SliceSpec::from_json(e.at("slice"));
        s.seed = e.at("seed");
        s.order = e.at("order").get<std::vector<std::string>>();
        s.created_ms = e.value("created_ms", std::int64_t{0});
        sessions_.emplace(s.session_id, std::move(s));
      } else if (e.at("type") == "judgment") {
        apply({e.at("session_id"), e.at("item_id"), e.value("polarity", 1), e.at("alpha"),
               human_answer_from_string(e.at("answer")), e.at("latency_ms"), e.at("timestamp_ms")});
      }
    }
  }

  Manifest manifest_;
  std::filesystem::path journal_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  std::map<std::string, StudySession> sessions_;
  std::set<std::pair<std::string, std::string>> judged_;
  std::vector<JudgmentRecord> records_;
};

/// HTTP front end for StudyService.
class StudyServer {
 public:
  StudyServer(StudyService& service, std::filesystem::path static_dir = {}) : svc_(service) {
    using httplib::Request, httplib::Response;
    auto json_reply = [](Response& res, int status, const nlohmann::json& body) {
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };
    auto guarded = [json_reply](auto fn) {
      return [fn, json_reply](const Request& req, Response& res) {
        try {
          fn(req, res);
        } catch (const std::out_of_range& e) {
          const std::string what = e.what();
          json_reply(res, what.find("unknown session") != std::string::npos ? 404 : 409, {{"error", what}});
        } catch (const ValidationError& e) {
          json_reply(res, 400, {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
          json_reply(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
          json_reply(res, 500, {{"error", e.what()}});
        }
      };
    };

    server_.Post("/sessions", guarded([this, json_reply](const Request& req, Response& res) {
      const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
      const auto id = svc_.create_session(SliceSpec::from_json(body.value("slice", nlohmann::json::object())),
                                          body.value("seed", std::uint64_t{0}), body.value("participant", ""));
      json_reply(res, 201, {{"session_id", id}, {"total", svc_.session(id)->order.size()}});
    }));
    server_.Get(R"(/sessions/([^/]+)/next)", guarded([this, json_reply](const Request& req, Response& res) {
      json_reply(res, 200, svc_.next_trial(req.matches[1]));
    }));
    server_.Post(R"(/sessions/([^/]+)/judgments)", guarded([this, json_reply](const Request& req, Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const auto trial = body.contains("trial_id") ? body["trial_id"] : body.at("item_id");
      const auto r = svc_.submit_judgment(req.matches[1], trial.get<std::string>(),
                                          human_answer_from_string(body.at("answer").get<std::string>()),
                                          body.value("latency_ms", 0.0));
      const auto s = svc_.session(req.matches[1]);
      json_reply(res, 200,
                 {{"status", r == StudyService::SubmitResult::accepted ? "accepted" : "duplicate"}, {"cursor", s->cursor}});
    }));
    server_.Get("/export/detection-rates", guarded([this, json_reply](const Request& req, Response& res) {
      json_reply(res, 200, rates_json(svc_.export_detection_rates(parse_filter(req))));
    }));
    server_.Get(R"(/stimuli/([0-9a-f]+)\.png)", guarded([this, json_reply](const Request& req, Response& res) {
      const auto* item = svc_.manifest().find(req.matches[1]);
      if (!item) return json_reply(res, 404, {{"error", "unknown stimulus"}});
      res.set_content(util::read_file(svc_.manifest().root / item->image_path), "image/png");
    }));
    if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) server_.set_mount_point("/", static_dir.string());
  }
  ~StudyServer() { stop(); }

  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw TransportError("study: cannot bind port " + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }
  void serve(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port)) throw TransportError("study: cannot bind port " + std::to_string(port));
    port_ = port;
    server_.listen_after_bind();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  int port() const { return port_; }

  /// Keys are alphas rendered as strings so the object maps straight back to
  /// human_threshold input.
  static nlohmann::json rates_json(const std::map<double, double>& rates) {
    nlohmann::json j = nlohmann::json::object();
    for (auto [a, r] : rates) j[util::format_number(a, 6)] = r;
    return {{"rates", j}};
  }

 private:
  static ExportFilter parse_filter(const httplib::Request& req) {
    ExportFilter f;
    if (!req.has_param("filter")) return f;
    const auto j = nlohmann::json::parse(req.get_param_value("filter"));
    f.sessions = j.value("sessions", std::vector<std::string>{});
    f.participants = j.value("participants", std::vector<std::string>{});
    f.cases = j.value("cases", std::vector<int>{});
    for (const auto& c : j.value("categories", std::vector<std::string>{})) f.categories.push_back(category_from_string(c));
    return f;
  }

  StudyService& svc_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace viprobe
