#pragma once

// One declarative experiment file drives every subcommand:
//
//   {
//     "output_dir": "runs/mini",
//     "dataset":  { ...DatasetConfig... },
//     "models":   [ { ...ModelSpec..., "mock": { ...MockConfig... } } ],
//     "prompts":  { "variants": ["forward", "reverse"], "kinds": [...], "cases": [...] },
//     "metrics":  { "epsilon": 0.001 },
//     "study":    { "host": "127.0.0.1", "port": 8080, "slice": {...}, "static_dir": "ui/dist" }
//   }
//
// Artifacts land under output_dir: dataset/, responses/<model>.jsonl,
// scores/<model>.json, report/, study/journal.jsonl.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "viprobe/dataset.hpp"
#include "viprobe/gateway.hpp"
#include "viprobe/metrics.hpp"
#include "viprobe/mock_provider.hpp"
#include "viprobe/report.hpp"
#include "viprobe/study.hpp"

namespace viprobe {

struct ModelEntry {
  ModelSpec spec;
  MockConfig mock;  // used when spec.provider == "mock"
};

struct StudyConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  SliceSpec slice;
  std::string static_dir;
  std::string journal;  // default <output_dir>/study/journal.jsonl
};

struct ExperimentConfig {
  fs::path output_dir = "vi-probe-out";
  DatasetConfig dataset;
  std::vector<ModelEntry> models;
  PromptPlan prompts;
  MetricConfig metrics;
  StudyConfig study;

  fs::path dataset_dir() const { return fs::path(dataset.output_dir); }
  fs::path manifest_path() const { return dataset_dir() / "manifest.jsonl"; }
  fs::path log_path(const std::string& model) const { return output_dir / "responses" / (file_stem(model) + ".jsonl"); }
  fs::path score_path(const std::string& model) const { return output_dir / "scores" / (file_stem(model) + ".json"); }
  fs::path report_dir() const { return output_dir / "report"; }
  fs::path journal_path() const {
    return study.journal.empty() ? output_dir / "study" / "journal.jsonl" : fs::path(study.journal);
  }

  static std::string file_stem(const std::string& model) {
    std::string s = model;
    for (char& c : s)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
    return s;
  }

  /// Validates the whole file up front. `out` (when given) overrides output_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::optional<fs::path>& out = std::nullopt) {
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    check_keys(j, {"output_dir", "dataset", "models", "prompts", "metrics", "study"}, "config");
    ExperimentConfig c;
    try {
      c.output_dir = out ? *out : fs::path(j.value("output_dir", c.output_dir.string()));
      auto ds = j.value("dataset", nlohmann::json::object());
      const bool own_dir = ds.is_object() && ds.contains("output_dir");
      c.dataset = DatasetConfig::from_json(ds);
      if (!own_dir) c.dataset.output_dir = (c.output_dir / "dataset").string();

      std::set<std::string> names;
      for (const auto& m : j.value("models", nlohmann::json::array())) {
        check_keys(m,
                   {"provider", "model", "endpoint", "auth_env", "params", "max_concurrency", "rate_limit_per_min",
                    "timeout_s", "max_attempts", "backoff_base_ms", "backoff_max_ms", "mock"},
                   "model");
        ModelEntry e{ModelSpec::from_json(m), {}};
        if (e.spec.provider == "mock") {
          e.mock = MockConfig::from_json(m.value("mock", nlohmann::json::object()));
        } else if (e.spec.provider == "http") {
          if (e.spec.endpoint.empty()) throw ValidationError("model " + e.spec.model + ": endpoint is required");
        } else {
          throw ValidationError("model " + e.spec.model + ": unknown provider '" + e.spec.provider + "'");
        }
        if (!names.insert(file_stem(e.spec.model)).second)
          throw ValidationError("config: duplicate model " + e.spec.model);
        c.models.push_back(std::move(e));
      }
      if (j.contains("prompts")) {
        check_keys(j["prompts"], {"variants", "kinds", "cases"}, "prompts");
        c.prompts = PromptPlan::from_json(j["prompts"]);
      }
      if (j.contains("metrics")) {
        check_keys(j["metrics"], {"epsilon"}, "metrics");
        c.metrics.epsilon = j["metrics"].value("epsilon", c.metrics.epsilon);
        if (!(c.metrics.epsilon > 0)) throw ValidationError("metrics: epsilon must be positive");
      }
      if (j.contains("study")) {
        const auto& s = j["study"];
        check_keys(s, {"host", "port", "slice", "static_dir", "journal"}, "study");
        c.study.host = s.value("host", c.study.host);
        c.study.port = s.value("port", c.study.port);
        if (s.contains("slice")) {
          check_keys(s["slice"], {"kinds", "cases", "alphas", "limit", "reverse_trials"}, "study.slice");
          c.study.slice = SliceSpec::from_json(s["slice"]);
        }
        c.study.static_dir = s.value("static_dir", c.study.static_dir);
        c.study.journal = s.value("journal", c.study.journal);
        if (c.study.port < 0 || c.study.port > 65535) throw ValidationError("study: port out of range");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
  }

  static ExperimentConfig load(const fs::path& path, const std::optional<fs::path>& out = std::nullopt) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("config: " + path.string() + ": " + e.what());
    }
    return from_json(j, out);
  }

 private:
  static void check_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) throw ValidationError(where + ": unknown key '" + k + "'");
  }
};

// ---------------------------------------------------------------------------
// Subcommands. Each returns the primary artifact path and throws
// ValidationError / TransportError / AuthError on failure.

inline Manifest require_manifest(const ExperimentConfig& c) {
  if (!fs::exists(c.manifest_path()))
    throw ValidationError("manifest not found: " + c.manifest_path().string() + " (run gen first)");
  return load_manifest(c.manifest_path());
}

inline fs::path cmd_gen(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  auto cfg = c.dataset;
  const auto m = build_dataset(cfg);
  if (cfg.dry_run) {
    const auto n = count_items(m);
    log << "dry run: " << n.total() << " items (O " << n.original << ", P " << n.perturbed << ", controls "
        << n.control << ", hints " << n.hint << ", IND " << n.inducer_only << ")\n";
    return c.manifest_path();
  }
  const auto report = validate_manifest(c.manifest_path());
  for (const auto& v : report.violations) log << "violation [" << v.check << "] " << v.item_id << ": " << v.message << "\n";
  if (!report.ok())
    throw ValidationError("generated dataset failed validation (" + std::to_string(report.violations.size()) +
                          " violations)");
  log << "generated " << m.items.size() << " items into " << c.dataset_dir().string() << "\n";
  return c.manifest_path();
}

inline std::vector<fs::path> cmd_probe(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  if (c.models.empty()) throw ValidationError("probe: config lists no models");
  const auto manifest = require_manifest(c);
  std::vector<fs::path> out;
  std::size_t failed = 0;
  for (const auto& e : c.models) {
    ModelSpec spec = e.spec;
    std::unique_ptr<MockServer> mock;
    if (spec.provider == "mock") {
      mock = std::make_unique<MockServer>(manifest, e.mock);
      mock->start();
      spec.endpoint = mock->endpoint();
    }
    HttpTransport transport(spec);
    ResponseStore store(c.log_path(spec.model));
    const auto s = probe(manifest, spec, c.prompts, transport, store);
    log << spec.model << ": planned " << s.planned << ", cached " << s.cached << ", sent " << s.sent << ", ok "
        << s.succeeded << ", failed " << s.failed << "\n";
    failed += s.failed;
    out.push_back(c.log_path(spec.model));
  }
  if (failed > 0) throw TransportError(std::to_string(failed) + " requests failed after retries; rerun probe to resume");
  return out;
}

inline std::vector<MetricReport> score_all(const ExperimentConfig& c) {
  if (c.models.empty()) throw ValidationError("score: config lists no models");
  const auto manifest = require_manifest(c);
  std::vector<MetricReport> reports;
  for (const auto& e : c.models) {
    const auto path = c.log_path(e.spec.model);
    if (!fs::exists(path)) throw ValidationError("response log not found: " + path.string() + " (run probe first)");
    reports.push_back(build_report(load_response_log(path), manifest, e.spec.model, c.metrics));
  }
  return reports;
}

inline std::vector<fs::path> cmd_score(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  std::vector<fs::path> out;
  for (const auto& r : score_all(c)) {
    for (const auto& w : r.warnings) log << "warning: " << r.model << ": " << w << "\n";
    log << r.model << ": " << r.warnings.size() << " warnings\n";
    const auto path = c.score_path(r.model);
    fs::create_directories(path.parent_path());
    util::write_file_atomic(path, to_json(r).dump(2) + "\n");
    out.push_back(path);
  }
  return out;
}

inline fs::path cmd_report(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  const auto reports = score_all(c);
  const auto files = write_report(reports, c.report_dir());
  log << "wrote " << files.size() << " report files into " << c.report_dir().string() << "\n";
  return c.report_dir();
}

/// Blocks serving the study API until the process is stopped.
inline void cmd_study(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  const auto manifest = require_manifest(c);
  fs::create_directories(c.journal_path().parent_path());
  StudyService svc(manifest, c.journal_path());
  svc.compact();
  StudyServer server(svc, c.study.static_dir);
  log << "study service on http://" << c.study.host << ":" << c.study.port << "\n";
  server.serve(c.study.host, c.study.port);
}

}  // namespace viprobe
