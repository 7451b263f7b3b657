#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "viprobe/catalog.hpp"
#include "viprobe/prompts.hpp"
#include "viprobe/raster.hpp"
#include "viprobe/svg.hpp"
#include "viprobe/variants.hpp"

namespace viprobe {

namespace fs = std::filesystem;

struct DatasetConfig {
  std::vector<int> cases;  // empty means every catalog case
  int originals_per_case = 1;
  std::map<int, int> originals_overrides;
  std::vector<double> alpha_grid = canonical_alpha_grid();
  std::vector<VariantKind> kinds{kAllKinds.begin(), kAllKinds.end()};
  std::string output_dir = "dataset";
  std::uint64_t master_seed = 0;
  double raster_scale = 1.0;
  bool emit_svg = false;
  bool dry_run = false;
  int workers = 0;  // 0: hardware concurrency

  std::vector<int> resolved_cases(const Catalog& catalog = Catalog::builtin()) const {
    if (!cases.empty()) return cases;
    std::vector<int> all;
    for (const auto& d : catalog.cases()) all.push_back(d.case_id);
    return all;
  }

  int originals_for(int case_id) const {
    auto it = originals_overrides.find(case_id);
    return it == originals_overrides.end() ? originals_per_case : it->second;
  }

  void validate(const Catalog& catalog = Catalog::builtin()) const {
    if (originals_per_case < 1) throw ValidationError("dataset: originals_per_case must be >= 1");
    for (auto [id, n] : originals_overrides) {
      if (n < 1) throw ValidationError("dataset: override for case " + std::to_string(id) + " must be >= 1");
      if (!catalog.contains(id)) throw ValidationError("dataset: override names unknown case " + std::to_string(id));
    }
    std::set<int> seen;
    for (int id : cases) {
      if (!catalog.contains(id)) throw ValidationError("dataset: unknown case " + std::to_string(id));
      if (!seen.insert(id).second) throw ValidationError("dataset: duplicate case " + std::to_string(id));
    }
    if (kinds.empty()) throw ValidationError("dataset: no variant kinds requested");
    std::set<double> grid;
    for (double a : alpha_grid) {
      if (!std::isfinite(a) || a == 0 || a < -1 || a > 1)
        throw ValidationError("dataset: alpha grid values must lie in [-1, 1] without 0");
      if (!grid.insert(a).second) throw ValidationError("dataset: duplicate alpha in grid");
    }
    const bool wants_perturbed = std::any_of(kinds.begin(), kinds.end(), is_perturbed);
    if (wants_perturbed && alpha_grid.empty()) throw ValidationError("dataset: perturbed kinds need an alpha grid");
    if (!(raster_scale > 0)) throw ValidationError("dataset: raster_scale must be positive");
    if (workers < 0) throw ValidationError("dataset: workers must be >= 0");
  }

  nlohmann::json to_json() const {
    nlohmann::json k = nlohmann::json::array();
    for (auto v : kinds) k.push_back(to_string(v));
    nlohmann::json o = nlohmann::json::object();
    for (auto [id, n] : originals_overrides) o[std::to_string(id)] = n;
    return {{"cases", cases},          {"originals_per_case", originals_per_case},
            {"originals_overrides", o}, {"alpha_grid", alpha_grid},
            {"kinds", k},              {"output_dir", output_dir},
            {"master_seed", master_seed}, {"raster_scale", raster_scale},
            {"emit_svg", emit_svg},    {"workers", workers}};
  }

  static DatasetConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("dataset config must be an object");
    static const std::set<std::string> known = {"cases", "originals_per_case", "originals_overrides",
                                                "alpha_grid", "kinds", "output_dir", "master_seed",
                                                "raster_scale", "emit_svg", "dry_run", "workers"};
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) throw ValidationError("dataset config: unknown key '" + k + "'");
    DatasetConfig c;
    try {
      if (j.contains("cases")) {
        if (j["cases"].is_string() && j["cases"] == "all") c.cases.clear();
        else c.cases = j["cases"].get<std::vector<int>>();
      }
      c.originals_per_case = j.value("originals_per_case", c.originals_per_case);
      if (j.contains("originals_overrides"))
        for (const auto& [k, v] : j["originals_overrides"].items()) c.originals_overrides[std::stoi(k)] = v.get<int>();
      if (j.contains("alpha_grid")) c.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
      if (j.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : j["kinds"]) c.kinds.push_back(kind_from_string(k.get<std::string>()));
      }
      c.output_dir = j.value("output_dir", c.output_dir);
      c.master_seed = j.value("master_seed", c.master_seed);
      c.raster_scale = j.value("raster_scale", c.raster_scale);
      c.emit_svg = j.value("emit_svg", c.emit_svg);
      c.dry_run = j.value("dry_run", c.dry_run);
      c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("dataset config: ") + e.what());
    } catch (const std::invalid_argument&) {
      throw ValidationError("dataset config: override keys must be case ids");
    }
    c.validate();
    return c;
  }
};

struct ManifestItem {
  std::string item_id;
  int case_id = 0;
  std::string case_name;
  Category category = Category::size;
  VariantKind variant_kind = VariantKind::O;
  double alpha = 0;
  std::uint64_t style_seed = 0;
  double factor_value = 0;
  std::string image_path;  // relative to the manifest directory
  std::string image_sha256;
  std::string scene_path;
  std::string vector_path;  // empty unless SVG twins were emitted
  GroundTruth ground_truth;
  std::string question_forward;
  std::string question_reverse;
  std::string generator_version = kGeneratorVersion;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"item_id", item_id},
                        {"case_id", case_id},
                        {"case_name", case_name},
                        {"category", to_string(category)},
                        {"variant_kind", to_string(variant_kind)},
                        {"alpha", alpha},
                        {"style_seed", style_seed},
                        {"factor_value", factor_value},
                        {"image_path", image_path},
                        {"image_sha256", image_sha256},
                        {"scene_path", scene_path},
                        {"ground_truth",
                         {{"y_forward", ground_truth.y_forward},
                          {"y_reverse", ground_truth.y_reverse},
                          {"y_instructional", ground_truth.y_instructional}}},
                        {"question_forward", question_forward},
                        {"question_reverse", question_reverse},
                        {"generator_version", generator_version}};
    if (!vector_path.empty()) j["vector_path"] = vector_path;
    return j;
  }

  static ManifestItem from_json(const nlohmann::json& j) {
    ManifestItem m;
    m.item_id = j.at("item_id").get<std::string>();
    m.case_id = j.at("case_id").get<int>();
    m.case_name = j.at("case_name").get<std::string>();
    m.category = category_from_string(j.at("category").get<std::string>());
    m.variant_kind = kind_from_string(j.at("variant_kind").get<std::string>());
    m.alpha = j.at("alpha").get<double>();
    m.style_seed = j.at("style_seed").get<std::uint64_t>();
    m.factor_value = j.at("factor_value").get<double>();
    m.image_path = j.at("image_path").get<std::string>();
    m.image_sha256 = j.at("image_sha256").get<std::string>();
    m.scene_path = j.at("scene_path").get<std::string>();
    m.vector_path = j.value("vector_path", std::string());
    const auto& g = j.at("ground_truth");
    m.ground_truth = {g.at("y_forward").get<int>(), g.at("y_reverse").get<int>(), g.at("y_instructional").get<int>()};
    m.question_forward = j.at("question_forward").get<std::string>();
    m.question_reverse = j.at("question_reverse").get<std::string>();
    m.generator_version = j.at("generator_version").get<std::string>();
    return m;
  }
};

struct Manifest {
  fs::path root;  // directory holding manifest.jsonl; item paths are relative to it
  std::vector<ManifestItem> items;

  const ManifestItem* find(const std::string& id) const {
    auto it = std::lower_bound(items.begin(), items.end(), id,
                               [](const ManifestItem& m, const std::string& k) { return m.item_id < k; });
    return it != items.end() && it->item_id == id ? &*it : nullptr;
  }
};

inline std::string make_item_id(int case_id, VariantKind kind, double alpha, std::uint64_t seed,
                                const std::string& version = kGeneratorVersion) {
  char a[32];
  std::snprintf(a, sizeof a, "%.6f", alpha == 0 ? 0.0 : alpha);
  const std::string key = "case=" + std::to_string(case_id) + "|kind=" + to_string(kind) + "|alpha=" + a +
                          "|seed=" + std::to_string(seed) + "|version=" + version;
  return util::sha256_hex(key).substr(0, 16);
}

/// Canonical text: one compact JSON object per line, sorted by item_id.
inline std::string manifest_text(const Manifest& m) {
  std::string out;
  for (const auto& it : m.items) out += it.to_json().dump() + "\n";
  return out;
}

inline void sort_items(Manifest& m) {
  std::sort(m.items.begin(), m.items.end(),
            [](const ManifestItem& a, const ManifestItem& b) { return a.item_id < b.item_id; });
}

inline Manifest load_manifest(const fs::path& path) {
  Manifest m;
  m.root = path.parent_path();
  std::istringstream in(util::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      m.items.push_back(ManifestItem::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  sort_items(m);
  return m;
}

inline void write_manifest(const Manifest& m, const fs::path& path) { util::write_file_atomic(path, manifest_text(m)); }

inline std::string manifest_hash(const Manifest& m) { return util::sha256_hex(manifest_text(m)); }

/// Index 0 is always the default style; later indices derive from
/// (master_seed, case, index) and skip anything already used.
inline std::vector<StyleParams> enumerate_style_variants(int case_id, int count, std::uint64_t master_seed) {
  if (count < 1) throw ValidationError("style variants: count must be >= 1");
  if (static_cast<std::size_t>(count) > Palette::space_size())
    throw ValidationError("style variants: " + std::to_string(count) + " exceeds the palette space of " +
                          std::to_string(Palette::space_size()));
  std::vector<StyleParams> out{style_from_seed(0)};
  std::set<std::string> used{style_key(out.front())};
  std::uint64_t probe = 0;
  while (static_cast<int>(out.size()) < count) {
    const std::uint64_t seed = util::derive_seed(master_seed, static_cast<std::uint64_t>(case_id), ++probe);
    if (seed == 0) continue;
    auto s = style_from_seed(seed);
    if (used.insert(style_key(s)).second) out.push_back(s);
  }
  return out;
}

struct PlannedItem {
  int case_id;
  VariantKind kind;
  double alpha;
  StyleParams style;
};

inline std::vector<PlannedItem> plan_dataset(const DatasetConfig& config, const Catalog& catalog = Catalog::builtin()) {
  config.validate(catalog);
  std::vector<PlannedItem> plan;
  for (int case_id : config.resolved_cases(catalog)) {
    for (const auto& style : enumerate_style_variants(case_id, config.originals_for(case_id), config.master_seed)) {
      for (auto kind : config.kinds) {
        if (is_perturbed(kind)) {
          for (double a : config.alpha_grid) plan.push_back({case_id, kind, a, style});
        } else {
          plan.push_back({case_id, kind, 0.0, style});
        }
      }
    }
  }
  return plan;
}

inline ManifestItem describe_item(const PlannedItem& p, const Catalog& catalog = Catalog::builtin()) {
  const auto& d = catalog.at(p.case_id);
  ManifestItem m;
  m.item_id = make_item_id(p.case_id, p.kind, p.alpha, p.style.seed);
  m.case_id = p.case_id;
  m.case_name = d.name;
  m.category = d.category;
  m.variant_kind = p.kind;
  m.alpha = p.alpha;
  m.style_seed = p.style.seed;
  m.factor_value = catalog.map_alpha(p.case_id, p.alpha).value;
  m.image_path = "images/" + m.item_id + ".png";
  m.scene_path = "scenes/" + m.item_id + ".json";
  m.ground_truth = catalog.ground_truth(p.case_id, p.kind, p.alpha);
  m.question_forward = d.forward_question;
  m.question_reverse = d.reverse_question;
  return m;
}

/// Plans, renders and writes the dataset. Items are produced in parallel and
/// sorted before the single manifest write, so output ignores scheduling.
inline Manifest build_dataset(const DatasetConfig& config, const Catalog& catalog = Catalog::builtin()) {
  const auto plan = plan_dataset(config, catalog);
  Manifest m;
  m.root = config.output_dir;
  m.items.resize(plan.size());
  if (config.dry_run) {
    for (std::size_t i = 0; i < plan.size(); ++i) m.items[i] = describe_item(plan[i], catalog);
    sort_items(m);
    return m;
  }

  std::error_code ec;
  fs::create_directories(m.root / "images", ec);
  fs::create_directories(m.root / "scenes", ec);
  if (config.emit_svg) fs::create_directories(m.root / "vectors", ec);
  if (ec) throw Error("cannot create output directory " + m.root.string() + ": " + ec.message());

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      {
        std::lock_guard lk(err_mu);
        if (!first_error.empty()) return;
      }
      const auto& p = plan[i];
      try {
        auto item = describe_item(p, catalog);
        const auto v = generate_variant(p.case_id, p.kind, p.alpha, p.style, catalog);
        const auto png = encode_png(rasterize(v.scene, RasterConfig{config.raster_scale, 16}));
        item.image_sha256 = util::sha256_hex(std::span<const std::uint8_t>(png));
        util::write_file_atomic(m.root / item.image_path, std::span<const std::uint8_t>(png));
        util::write_file_atomic(m.root / item.scene_path, serialize(v.scene) + "\n");
        if (config.emit_svg) {
          item.vector_path = "vectors/" + item.item_id + ".svg";
          util::write_file_atomic(m.root / item.vector_path, emit_vector(v.scene));
        }
        m.items[i] = std::move(item);
      } catch (const std::exception& e) {
        std::lock_guard lk(err_mu);
        if (first_error.empty())
          first_error = "case " + std::to_string(p.case_id) + " kind " + to_string(p.kind) + " alpha " +
                        util::format_number(p.alpha) + " seed " + std::to_string(p.style.seed) + ": " + e.what();
      }
    }
  };
  const int n = config.workers > 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw ValidationError(first_error);

  sort_items(m);
  write_manifest(m, m.root / "manifest.jsonl");
  util::write_file_atomic(m.root / "prompts.json", prompts_document(config.resolved_cases(catalog), catalog).dump(2) + "\n");
  util::write_file_atomic(m.root / "dataset_config.json", config.to_json().dump(2) + "\n");
  return m;
}

struct CountSummary {
  std::size_t original = 0, perturbed = 0, control = 0, hint = 0, inducer_only = 0;
  std::size_t total() const { return original + perturbed + control + hint + inducer_only; }
};

inline CountSummary count_items(const Manifest& m) {
  CountSummary c;
  for (const auto& it : m.items) {
    switch (it.variant_kind) {
      case VariantKind::O: ++c.original; break;
      case VariantKind::P: ++c.perturbed; break;
      case VariantKind::OC:
      case VariantKind::PC: ++c.control; break;
      case VariantKind::OH:
      case VariantKind::PH: ++c.hint; break;
      case VariantKind::IND: ++c.inducer_only; break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string check;  // label_algebra, ground_truth, control_purity, ...
  std::string item_id;
  std::string message;
};

struct ValidationReport {
  std::size_t items_checked = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& check) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const Violation& v) { return v.check == check; }));
  }
  void add(std::string check, std::string id, std::string msg) {
    violations.push_back({std::move(check), std::move(id), std::move(msg)});
  }
};

namespace dataset_detail {

inline std::vector<Element> without_hints(const Scene& s) {
  std::vector<Element> out;
  for (const auto& e : s.elements)
    if (e.role != Role::hint) out.push_back(e);
  return out;
}

inline void check_roles(const ManifestItem& it, const Scene& s, ValidationReport& r) {
  std::map<Role, int> n;
  for (const auto& e : s.elements) ++n[e.role];
  const auto k = it.variant_kind;
  if (is_control(k) && (n[Role::inducer] > 0 || n[Role::hint] > 0))
    r.add("control_purity", it.item_id, "control scene has " + std::to_string(n[Role::inducer]) + " inducer(s) and " +
                                            std::to_string(n[Role::hint]) + " hint(s)");
  if (k == VariantKind::IND && (n[Role::target] > 0 || n[Role::hint] > 0 || n[Role::decoration] > 0))
    r.add("inducer_only_purity", it.item_id, "inducer-only scene has non-inducer elements");
  if ((k == VariantKind::O || k == VariantKind::P) && n[Role::hint] > 0)
    r.add("control_purity", it.item_id, "unhinted scene carries hint elements");
  if (is_hinted(k) && n[Role::hint] == 0) r.add("hint_neutrality", it.item_id, "hinted scene has no hints");
}

}  // namespace dataset_detail

/// Checks a manifest and the files it references. Never throws on bad data;
/// every problem becomes a violation.
inline ValidationReport validate_manifest(const Manifest& m, const Catalog& catalog = Catalog::builtin()) {
  using namespace dataset_detail;
  ValidationReport r;
  std::set<std::string> ids;
  // case -> kind -> count, case -> distinct seeds, case -> distinct perturbed alphas
  std::map<int, std::map<VariantKind, std::size_t>> per_kind;
  std::map<int, std::set<std::uint64_t>> seeds;
  std::map<int, std::set<double>> alphas;

  for (const auto& it : m.items) {
    ++r.items_checked;
    if (!ids.insert(it.item_id).second) r.add("count_arithmetic", it.item_id, "duplicate item id");
    if (!catalog.contains(it.case_id)) {
      r.add("ground_truth", it.item_id, "unknown case " + std::to_string(it.case_id));
      continue;
    }
    ++per_kind[it.case_id][it.variant_kind];
    seeds[it.case_id].insert(it.style_seed);
    if (is_perturbed(it.variant_kind)) alphas[it.case_id].insert(it.alpha);

    if (!it.ground_truth.consistent())
      r.add("label_algebra", it.item_id, "labels violate y_reverse = 1 - y_forward, y_instructional = y_forward");
    try {
      if (!(it.ground_truth == catalog.ground_truth(it.case_id, it.variant_kind, it.alpha)))
        r.add("ground_truth", it.item_id, "stored labels differ from the catalog");
      if (it.item_id != make_item_id(it.case_id, it.variant_kind, it.alpha, it.style_seed, it.generator_version))
        r.add("provenance", it.item_id, "item id does not match its provenance");
    } catch (const std::exception& e) {
      r.add("ground_truth", it.item_id, e.what());
      continue;
    }

    try {
      const std::string png = util::read_file(m.root / it.image_path);
      if (util::sha256_hex(png) != it.image_sha256) r.add("hash_mismatch", it.item_id, "PNG bytes do not match stored hash");
    } catch (const std::exception& e) {
      r.add("io", it.item_id, e.what());
    }

    Scene scene;
    try {
      scene = scene_from_json(nlohmann::json::parse(util::read_file(m.root / it.scene_path)));
      validate(scene);
    } catch (const std::exception& e) {
      r.add("io", it.item_id, std::string("scene: ") + e.what());
      continue;
    }
    const auto& pv = scene.provenance;
    if (!pv || pv->case_id != it.case_id || pv->kind != to_string(it.variant_kind) || pv->alpha != it.alpha ||
        pv->style_seed != it.style_seed || pv->generator_version != it.generator_version)
      r.add("provenance", it.item_id, "scene provenance does not match the manifest entry");
    check_roles(it, scene, r);

    try {
      if (it.variant_kind != VariantKind::IND) {
        const double want = catalog.map_alpha(it.case_id, it.alpha).value;
        const double got = measured_setting(it.case_id, scene, catalog);
        if (std::abs(got - want) > 1e-9)
          r.add("geometry", it.item_id,
                "measured setting " + util::format_number(got, 9) + " != " + util::format_number(want, 9));
      }
      if (is_hinted(it.variant_kind)) {
        const auto twin = generate_variant(it.case_id, base_kind(it.variant_kind), it.alpha,
                                           style_from_seed(it.style_seed), catalog);
        if (without_hints(scene) != twin.scene.elements)
          r.add("hint_neutrality", it.item_id, "target/inducer sub-scene differs from the unhinted twin");
      }
    } catch (const std::exception& e) {
      r.add("geometry", it.item_id, e.what());
    }
  }

  for (const auto& [case_id, kinds] : per_kind) {
    const std::size_t originals = seeds[case_id].size();
    const std::size_t grid = alphas[case_id].size();
    for (const auto& [kind, n] : kinds) {
      const std::size_t want = originals * (is_perturbed(kind) ? grid : 1);
      if (n != want)
        r.add("count_arithmetic", "case " + std::to_string(case_id),
              std::string(to_string(kind)) + " has " + std::to_string(n) + " items, expected " + std::to_string(want));
    }
  }
  return r;
}

inline ValidationReport validate_manifest(const fs::path& manifest_path, const Catalog& catalog = Catalog::builtin()) {
  try {
    return validate_manifest(load_manifest(manifest_path), catalog);
  } catch (const std::exception& e) {
    ValidationReport r;
    r.add("io", "", e.what());
    return r;
  }
}

}  // namespace viprobe
