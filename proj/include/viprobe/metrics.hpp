#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "viprobe/dataset.hpp"
#include "viprobe/gateway.hpp"

namespace viprobe {

struct ResponsePair {
  std::string item_id;
  AnswerValue a_forward = AnswerValue::invalid;
  AnswerValue a_reverse = AnswerValue::invalid;
  GroundTruth ground_truth;
  // Slice keys copied from the manifest.
  int case_id = 0;
  Category category = Category::size;
  VariantKind kind = VariantKind::O;
  double alpha = 0;
};

inline bool has_invalid(const ResponsePair& p) {
  return p.a_forward == AnswerValue::invalid || p.a_reverse == AnswerValue::invalid;
}
inline int as_int(AnswerValue v) { return v == AnswerValue::yes ? 1 : v == AnswerValue::no ? 0 : -1; }

inline bool complementary(const ResponsePair& p) {
  return !has_invalid(p) && as_int(p.a_reverse) == 1 - as_int(p.a_forward);
}
inline bool both_correct(const ResponsePair& p) {
  return !has_invalid(p) && as_int(p.a_forward) == p.ground_truth.y_forward &&
         as_int(p.a_reverse) == p.ground_truth.y_reverse;
}
inline bool fixated(const ResponsePair& p) { return !has_invalid(p) && p.a_forward == p.a_reverse; }

struct PairingResult {
  std::vector<ResponsePair> pairs;
  std::vector<std::string> missing;     // items with only one polarity answered
  std::vector<std::string> duplicates;  // "(item, variant)" keys seen more than once
  std::vector<std::string> unknown;     // log items absent from the manifest
};

/// Pairs forward/reverse rows per item. With `instructional` set, pairs the
/// instructional variants instead. Failed rows count as invalid answers; for
/// repeated (item, variant) rows the latest timestamp wins.
inline PairingResult pair_responses(const std::vector<RawResponse>& log, const Manifest& manifest,
                                    bool instructional = false, const std::string& model = {}) {
  const PromptVariant fwd = instructional ? PromptVariant::instructional : PromptVariant::forward;
  const PromptVariant rev = instructional ? PromptVariant::instructional_reverse : PromptVariant::reverse;
  std::map<std::pair<std::string, PromptVariant>, const RawResponse*> latest;
  PairingResult out;
  std::set<std::string> dup_keys, unknown;
  for (const auto& r : log) {
    if (r.prompt_variant != fwd && r.prompt_variant != rev) continue;
    if (!model.empty() && r.model != model) continue;
    if (!manifest.find(r.item_id)) {
      unknown.insert(r.item_id);
      continue;
    }
    auto [it, fresh] = latest.try_emplace({r.item_id, r.prompt_variant}, &r);
    if (!fresh) {
      dup_keys.insert(r.item_id + "/" + to_string(r.prompt_variant));
      if (r.timestamp_ms >= it->second->timestamp_ms) it->second = &r;
    }
  }
  auto answer = [](const RawResponse* r) {
    return r->status == "ok" ? parse_answer(r->raw_text).value : AnswerValue::invalid;
  };
  std::set<std::string> seen;
  for (const auto& [key, row] : latest) {
    const auto& id = key.first;
    if (!seen.insert(id).second) continue;
    auto f = latest.find({id, fwd});
    auto r = latest.find({id, rev});
    if (f == latest.end() || r == latest.end()) {
      out.missing.push_back(id);
      continue;
    }
    const ManifestItem& m = *manifest.find(id);
    out.pairs.push_back({id, answer(f->second), answer(r->second), m.ground_truth, m.case_id, m.category,
                         m.variant_kind, m.alpha});
  }
  out.duplicates.assign(dup_keys.begin(), dup_keys.end());
  out.unknown.assign(unknown.begin(), unknown.end());
  return out;
}

// ---------------------------------------------------------------------------
// Paired-prompt metrics (fractions in [0, 1])

namespace metric_detail {
template <class Pred>
double mean_of(const std::vector<ResponsePair>& pairs, Pred pred, const char* what) {
  if (pairs.empty()) throw ValidationError(std::string(what) + ": empty input");
  std::size_t n = 0;
  for (const auto& p : pairs) n += pred(p) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(pairs.size());
}
}  // namespace metric_detail

inline double pfc(const std::vector<ResponsePair>& pairs) { return metric_detail::mean_of(pairs, complementary, "PFC"); }
inline double pfa(const std::vector<ResponsePair>& pairs) { return metric_detail::mean_of(pairs, both_correct, "PFA"); }
inline double tfi(const std::vector<ResponsePair>& pairs) { return metric_detail::mean_of(pairs, fixated, "TFI"); }
inline double invalid_rate(const std::vector<ResponsePair>& pairs) {
  return metric_detail::mean_of(pairs, has_invalid, "invalid rate");
}
inline double forward_accuracy(const std::vector<ResponsePair>& pairs) {
  return metric_detail::mean_of(
      pairs, [](const ResponsePair& p) { return as_int(p.a_forward) == p.ground_truth.y_forward; }, "forward accuracy");
}
inline double reverse_accuracy(const std::vector<ResponsePair>& pairs) {
  return metric_detail::mean_of(
      pairs, [](const ResponsePair& p) { return as_int(p.a_reverse) == p.ground_truth.y_reverse; }, "reverse accuracy");
}

/// Coherent-but-wrong share. Inputs share one unit (fractions or percent).
inline double cbw(double pfc_value, double pfa_value) {
  if (!std::isfinite(pfc_value) || !std::isfinite(pfa_value) || pfc_value < 0 || pfa_value < 0)
    throw ValidationError("CbW: inputs must be finite and non-negative");
  if (pfa_value > pfc_value) throw ValidationError("CbW: PFA exceeds PFC");
  return pfc_value - pfa_value;
}

struct ConditionSlice {
  std::set<VariantKind> kinds;
  std::optional<std::set<double>> alphas;
  std::optional<std::set<Category>> categories;
  std::optional<std::set<int>> cases;

  bool contains(const ResponsePair& p) const {
    return kinds.count(p.kind) && (!alphas || alphas->count(p.alpha)) && (!categories || categories->count(p.category)) &&
           (!cases || cases->count(p.case_id));
  }
  static ConditionSlice of(VariantKind k) { return {{k}, std::nullopt, std::nullopt, std::nullopt}; }
};

inline std::vector<ResponsePair> select(const std::vector<ResponsePair>& pairs, const ConditionSlice& s) {
  std::vector<ResponsePair> out;
  for (const auto& p : pairs)
    if (s.contains(p)) out.push_back(p);
  return out;
}

/// Both-correct accuracy on a slice. Throws on an empty slice.
inline double condition_accuracy(const std::vector<ResponsePair>& pairs, const ConditionSlice& slice) {
  const auto sel = select(pairs, slice);
  if (sel.empty()) throw ValidationError("condition accuracy: empty slice");
  return pfa(sel);
}

struct MetricConfig {
  double epsilon = 0.001;
};

enum class AccuracyScale { fraction, percent };

/// R = |O - P| / (|OC - PC| + eps), evaluated in the units of the inputs.
/// Published R values correspond to percent inputs with eps = 0.001.
inline double illusion_multiplier(double acc_o, double acc_p, double acc_oc, double acc_pc, const MetricConfig& cfg = {},
                                  AccuracyScale scale = AccuracyScale::percent) {
  if (!(cfg.epsilon > 0)) throw ValidationError("R: epsilon must be positive");
  const double hi = scale == AccuracyScale::percent ? 100.0 : 1.0;
  for (double a : {acc_o, acc_p, acc_oc, acc_pc})
    if (!std::isfinite(a) || a < 0 || a > hi) throw ValidationError("R: accuracy outside the declared scale");
  return std::abs(acc_o - acc_p) / (std::abs(acc_oc - acc_pc) + cfg.epsilon);
}

inline double intervention_effect(double acc_with, double acc_without) { return acc_with - acc_without; }

struct DosePoint {
  double alpha;
  double accuracy;
  std::size_t n;
};

struct DoseCurve {
  VariantKind kind = VariantKind::P;
  std::vector<DosePoint> points;   // ascending signed alpha
  std::vector<double> missing;     // requested alphas with no pairs
};

inline DoseCurve dose_response(const std::vector<ResponsePair>& pairs, VariantKind kind,
                               const std::vector<double>& alphas = canonical_alpha_grid(),
                               const std::optional<std::set<Category>>& categories = std::nullopt) {
  if (!is_perturbed(kind)) throw ValidationError("dose response needs a perturbed kind");
  DoseCurve c;
  c.kind = kind;
  std::vector<double> grid = alphas;
  std::sort(grid.begin(), grid.end());
  for (double a : grid) {
    ConditionSlice s{{kind}, std::set<double>{a}, categories, std::nullopt};
    const auto sel = select(pairs, s);
    if (sel.empty()) c.missing.push_back(a);
    else c.points.push_back({a, pfa(sel), sel.size()});
  }
  return c;
}

/// Smallest |alpha| whose detection rate reaches `target` after folding the
/// two signs, isotonic (PAVA) smoothing and linear interpolation between
/// magnitudes. Empty when the fitted curve never reaches the target.
inline std::optional<double> human_threshold(const std::map<double, double>& rates, double target = 0.95) {
  std::map<double, std::pair<double, int>> folded;
  for (auto [a, r] : rates) {
    if (!std::isfinite(a) || !std::isfinite(r) || r < 0 || r > 1)
      throw ValidationError("threshold: rates must be finite fractions");
    if (a == 0) continue;
    auto& f = folded[std::abs(a)];
    f.first += r;
    ++f.second;
  }
  if (folded.size() < 3) throw ValidationError("threshold: need rates for at least 3 magnitudes");
  std::vector<double> xs, ys;
  for (auto& [a, f] : folded) xs.push_back(a), ys.push_back(f.first / f.second);

  // Pool-adjacent-violators for a non-decreasing fit, equal weights.
  struct Block {
    double sum;
    int n;
  };
  std::vector<Block> blocks;
  for (double y : ys) {
    blocks.push_back({y, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].sum / blocks[blocks.size() - 2].n >
                                    blocks.back().sum / blocks.back().n) {
      auto b = blocks.back();
      blocks.pop_back();
      blocks.back().sum += b.sum;
      blocks.back().n += b.n;
    }
  }
  std::vector<double> fit;
  for (const auto& b : blocks)
    for (int i = 0; i < b.n; ++i) fit.push_back(b.sum / b.n);

  for (std::size_t i = 0; i < fit.size(); ++i) {
    if (fit[i] < target) continue;
    if (i == 0) return xs[0];
    const double t = (target - fit[i - 1]) / (fit[i] - fit[i - 1]);
    return xs[i - 1] + t * (xs[i] - xs[i - 1]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Report

/// Table-style summary. Accuracies are both-correct fractions; absent slices
/// stay empty.
struct SliceSummary {
  std::map<VariantKind, double> accuracy;
  std::map<VariantKind, std::size_t> n;
  std::optional<double> pfc, pfa, tfi, cbw, invalid_rate;

  std::optional<double> at(VariantKind k) const {
    auto it = accuracy.find(k);
    return it == accuracy.end() ? std::nullopt : std::optional<double>(it->second);
  }
  std::optional<double> ave_illusion() const {
    auto o = at(VariantKind::O), p = at(VariantKind::P);
    return o && p ? std::optional<double>((*o + *p) / 2) : std::nullopt;
  }
  std::optional<double> ave_control() const {
    auto o = at(VariantKind::OC), p = at(VariantKind::PC);
    return o && p ? std::optional<double>((*o + *p) / 2) : std::nullopt;
  }
  std::optional<double> delta_o() const {
    auto o = at(VariantKind::O), c = at(VariantKind::OC);
    return o && c ? std::optional<double>(*o - *c) : std::nullopt;
  }
  std::optional<double> delta_p() const {
    auto p = at(VariantKind::P), c = at(VariantKind::PC);
    return p && c ? std::optional<double>(*p - *c) : std::nullopt;
  }
  /// Control average minus illusion average (positive: illusion hurts).
  std::optional<double> delta_ave() const {
    auto i = ave_illusion(), c = ave_control();
    return i && c ? std::optional<double>(*c - *i) : std::nullopt;
  }
  /// R on percent accuracies with the configured epsilon.
  std::optional<double> multiplier(const MetricConfig& cfg = {}) const {
    auto o = at(VariantKind::O), p = at(VariantKind::P), oc = at(VariantKind::OC), pc = at(VariantKind::PC);
    if (!o || !p || !oc || !pc) return std::nullopt;
    return illusion_multiplier(100 * *o, 100 * *p, 100 * *oc, 100 * *pc, cfg, AccuracyScale::percent);
  }
};

inline SliceSummary summarize(const std::vector<ResponsePair>& pairs) {
  SliceSummary s;
  for (auto k : kAllKinds) {
    const auto sel = select(pairs, ConditionSlice::of(k));
    if (sel.empty()) continue;
    s.accuracy[k] = pfa(sel);
    s.n[k] = sel.size();
  }
  if (!pairs.empty()) {
    s.pfc = pfc(pairs);
    s.pfa = pfa(pairs);
    s.tfi = tfi(pairs);
    s.cbw = cbw(*s.pfc, *s.pfa);
    s.invalid_rate = invalid_rate(pairs);
  }
  return s;
}

struct InterventionRow {
  std::string intervention;  // hint | system_prompt
  VariantKind condition;     // O or P
  double without;
  double with;
  double effect() const { return intervention_effect(with, without); }
};

struct MetricReport {
  std::string model;
  MetricConfig config;
  SliceSummary overall;
  std::map<Category, SliceSummary> per_category;
  std::vector<DoseCurve> dose;  // P and PC
  std::vector<InterventionRow> interventions;
  std::size_t missing_pairs = 0, duplicate_rows = 0, unknown_items = 0;
  std::vector<std::string> warnings;

  /// Control minus illusion average per category.
  std::map<Category, double> susceptibility_gap() const {
    std::map<Category, double> g;
    for (const auto& [c, s] : per_category)
      if (auto d = s.delta_ave()) g[c] = *d;
    return g;
  }
};

inline MetricReport build_report(const std::vector<RawResponse>& log, const Manifest& manifest, const std::string& model,
                                 const MetricConfig& cfg = {}) {
  MetricReport r;
  r.model = model;
  r.config = cfg;
  const auto plain = pair_responses(log, manifest, false, model);
  r.missing_pairs = plain.missing.size();
  r.duplicate_rows = plain.duplicates.size();
  r.unknown_items = plain.unknown.size();
  for (const auto& id : plain.missing) r.warnings.push_back("unpaired item " + id);
  for (const auto& k : plain.duplicates) r.warnings.push_back("duplicate rows for " + k + " (latest used)");
  for (const auto& id : plain.unknown) r.warnings.push_back("log item not in manifest " + id);

  r.overall = summarize(plain.pairs);
  std::map<Category, std::vector<ResponsePair>> by_cat;
  for (const auto& p : plain.pairs) by_cat[p.category].push_back(p);
  for (const auto& [c, ps] : by_cat) r.per_category[c] = summarize(ps);

  std::set<double> grid;
  for (const auto& it : manifest.items)
    if (is_perturbed(it.variant_kind)) grid.insert(it.alpha);
  for (auto k : {VariantKind::P, VariantKind::PC}) {
    if (!r.overall.at(k)) continue;
    r.dose.push_back(dose_response(plain.pairs, k, {grid.begin(), grid.end()}));
  }

  for (auto [base, hinted] : {std::pair{VariantKind::O, VariantKind::OH}, std::pair{VariantKind::P, VariantKind::PH}}) {
    auto w = r.overall.at(hinted), wo = r.overall.at(base);
    if (w && wo) r.interventions.push_back({"hint", base, *wo, *w});
  }
  const auto instr = pair_responses(log, manifest, true, model);
  if (!instr.pairs.empty()) {
    const auto with = summarize(instr.pairs);
    for (auto k : {VariantKind::O, VariantKind::P}) {
      auto w = with.at(k), wo = r.overall.at(k);
      if (w && wo) r.interventions.push_back({"system_prompt", k, *wo, *w});
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string fixed2(const std::optional<double>& v) {
  if (!v) return "";
  double x = std::round(*v * 100) / 100;
  if (x == 0) x = 0;  // no "-0.00"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string pct(const std::optional<double>& frac) {
  return frac ? fixed2(100 * *frac) : std::string();
}

inline constexpr const char* kTableHeader = "model,PFC,O,P,Ave,OC,PC,Ave,ΔO,ΔP,ΔAve,R";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string table_row(const std::string& label, const SliceSummary& s, const MetricConfig& cfg) {
  return csv_field(label) + "," + pct(s.pfc) + "," + pct(s.at(VariantKind::O)) + "," + pct(s.at(VariantKind::P)) + "," +
         pct(s.ave_illusion()) + "," + pct(s.at(VariantKind::OC)) + "," + pct(s.at(VariantKind::PC)) + "," +
         pct(s.ave_control()) + "," + pct(s.delta_o()) + "," + pct(s.delta_p()) + "," + pct(s.delta_ave()) + "," +
         fixed2(s.multiplier(cfg));
}

inline std::string table_csv(const std::vector<MetricReport>& reports) {
  std::string out = std::string(kTableHeader) + "\n";
  for (const auto& r : reports) out += table_row(r.model, r.overall, r.config) + "\n";
  return out;
}

inline std::string category_csv(const std::vector<MetricReport>& reports) {
  std::string out = "model,category,PFC,O,P,Ave,OC,PC,Ave,ΔO,ΔP,ΔAve,R\n";
  for (const auto& r : reports)
    for (const auto& [c, s] : r.per_category) {
      auto row = table_row(r.model, s, r.config);
      const auto comma = row.find(',', csv_field(r.model).size());
      out += row.substr(0, comma) + "," + to_string(c) + row.substr(comma) + "\n";
    }
  return out;
}

inline std::string intervention_csv(const std::vector<MetricReport>& reports) {
  std::string out = "model,intervention,condition,without,with,effect\n";
  for (const auto& r : reports)
    for (const auto& i : r.interventions)
      out += csv_field(r.model) + "," + i.intervention + "," + to_string(i.condition) + "," + pct(i.without) + "," +
             pct(i.with) + "," + pct(i.effect()) + "\n";
  return out;
}

inline std::string dose_csv(const std::vector<MetricReport>& reports) {
  std::string out = "model,condition,alpha,accuracy,n\n";
  for (const auto& r : reports)
    for (const auto& c : r.dose)
      for (const auto& p : c.points)
        out += csv_field(r.model) + "," + to_string(c.kind) + "," + util::format_number(p.alpha) + "," + pct(p.accuracy) +
               "," + std::to_string(p.n) + "\n";
  return out;
}

inline nlohmann::json to_json(const SliceSummary& s, const MetricConfig& cfg) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json acc = nlohmann::json::object(), n = nlohmann::json::object();
  for (const auto& [k, v] : s.accuracy) acc[to_string(k)] = v;
  for (const auto& [k, v] : s.n) n[to_string(k)] = v;
  return {{"accuracy", acc},         {"n", n},
          {"PFC", opt(s.pfc)},       {"PFA", opt(s.pfa)},
          {"TFI", opt(s.tfi)},       {"CbW", opt(s.cbw)},
          {"invalid_rate", opt(s.invalid_rate)},
          {"ave_illusion", opt(s.ave_illusion())}, {"ave_control", opt(s.ave_control())},
          {"delta_O", opt(s.delta_o())}, {"delta_P", opt(s.delta_p())},
          {"delta_ave", opt(s.delta_ave())}, {"R", opt(s.multiplier(cfg))}};
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [c, s] : r.per_category) cats[to_string(c)] = to_json(s, r.config);
  nlohmann::json gaps = nlohmann::json::object();
  for (const auto& [c, g] : r.susceptibility_gap()) gaps[to_string(c)] = g;
  nlohmann::json dose = nlohmann::json::array();
  for (const auto& c : r.dose) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) pts.push_back({{"alpha", p.alpha}, {"accuracy", p.accuracy}, {"n", p.n}});
    dose.push_back({{"condition", to_string(c.kind)}, {"points", pts}, {"missing", c.missing}});
  }
  nlohmann::json iv = nlohmann::json::array();
  for (const auto& i : r.interventions)
    iv.push_back({{"intervention", i.intervention}, {"condition", to_string(i.condition)}, {"without", i.without},
                  {"with", i.with}, {"effect", i.effect()}});
  return {{"model", r.model},
          {"epsilon", r.config.epsilon},
          {"overall", to_json(r.overall, r.config)},
          {"per_category", cats},
          {"susceptibility_gap", gaps},
          {"dose_response", dose},
          {"interventions", iv},
          {"missing_pairs", r.missing_pairs},
          {"duplicate_rows", r.duplicate_rows},
          {"unknown_items", r.unknown_items},
          {"warnings", r.warnings}};
}

/// Mean of per-case R values. Not the canonical aggregation (which takes slice
/// means first); provided for comparison only.
inline std::optional<double> per_case_multiplier_mean(const std::vector<ResponsePair>& pairs, const MetricConfig& cfg = {}) {
  std::map<int, std::vector<ResponsePair>> by_case;
  for (const auto& p : pairs) by_case[p.case_id].push_back(p);
  double sum = 0;
  int n = 0;
  for (const auto& [id, ps] : by_case)
    if (auto r = summarize(ps).multiplier(cfg)) sum += *r, ++n;
  return n ? std::optional<double>(sum / n) : std::nullopt;
}

}  // namespace viprobe
