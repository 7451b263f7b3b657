#pragma once

// The 27 illusion cases, perturbation-strength mapping, and the label algebra.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "viprobe/scene.hpp"
#include "viprobe/util.hpp"

namespace viprobe {

inline constexpr const char* kGeneratorVersion = "vi-probe-gen/1.0";
inline constexpr int kCatalogVersion = 1;
inline constexpr int kCaseCount = 27;

enum class Category { size, color, orientation };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::size: return "size";
    case Category::color: return "color";
    case Category::orientation: return "orientation";
  }
  return "?";
}

inline Category category_from_string(const std::string& s) {
  if (s == "size") return Category::size;
  if (s == "color") return Category::color;
  if (s == "orientation") return Category::orientation;
  throw ValidationError("unknown category: " + s);
}

/// What alpha manipulates.
enum class ControllingFactor { size_ratio, line_length, luminance, curvature, alignment };

inline const char* to_string(ControllingFactor f) {
  switch (f) {
    case ControllingFactor::size_ratio: return "size_ratio";
    case ControllingFactor::line_length: return "line_length";
    case ControllingFactor::luminance: return "luminance";
    case ControllingFactor::curvature: return "curvature";
    case ControllingFactor::alignment: return "alignment";
  }
  return "?";
}

inline ControllingFactor factor_from_string(const std::string& s) {
  for (auto f : {ControllingFactor::size_ratio, ControllingFactor::line_length,
                 ControllingFactor::luminance, ControllingFactor::curvature,
                 ControllingFactor::alignment})
    if (s == to_string(f)) return f;
  throw ValidationError("unknown controlling factor: " + s);
}

struct CaseDescriptor {
  int case_id = 0;
  std::string name;
  Category category = Category::size;
  std::string forward_question;
  std::string reverse_question;
  int classic_forward_label = 1;
  int inducer_only_label = 1;
  ControllingFactor controlling_factor = ControllingFactor::size_ratio;
  /// Delta-max for ratios, dL-max for luma gaps, c-max (scene units) for bows/offsets.
  double max_delta = 0;
};

// ---------------------------------------------------------------------------
// Variant kinds

enum class VariantKind { O, P, OC, PC, OH, PH, IND };

inline constexpr std::array<VariantKind, 7> kAllKinds = {VariantKind::O,  VariantKind::P,
                                                        VariantKind::OC, VariantKind::PC,
                                                        VariantKind::OH, VariantKind::PH,
                                                        VariantKind::IND};

inline const char* to_string(VariantKind k) {
  switch (k) {
    case VariantKind::O: return "O";
    case VariantKind::P: return "P";
    case VariantKind::OC: return "OC";
    case VariantKind::PC: return "PC";
    case VariantKind::OH: return "OH";
    case VariantKind::PH: return "PH";
    case VariantKind::IND: return "IND";
  }
  return "?";
}

inline VariantKind kind_from_string(const std::string& s) {
  for (auto k : kAllKinds)
    if (s == to_string(k)) return k;
  throw ValidationError("unknown variant kind: " + s);
}

inline bool is_perturbed(VariantKind k) {
  return k == VariantKind::P || k == VariantKind::PC || k == VariantKind::PH;
}
inline bool is_control(VariantKind k) { return k == VariantKind::OC || k == VariantKind::PC; }
inline bool is_hinted(VariantKind k) { return k == VariantKind::OH || k == VariantKind::PH; }

/// The unhinted, uncontrolled twin: OH -> O, PC -> P, ...
inline VariantKind base_kind(VariantKind k) {
  return is_perturbed(k) ? VariantKind::P : (k == VariantKind::IND ? VariantKind::IND : VariantKind::O);
}

/// Canonical signed grid: +-0.2 .. +-1.0, ascending.
inline std::vector<double> canonical_alpha_grid() {
  return {-1.0, -0.8, -0.6, -0.4, -0.2, 0.2, 0.4, 0.6, 0.8, 1.0};
}

inline void check_kind_alpha(VariantKind kind, double alpha) {
  if (!std::isfinite(alpha) || alpha < -1.0 || alpha > 1.0)
    throw ValidationError("alpha outside [-1, 1]");
  if (is_perturbed(kind) && alpha == 0.0)
    throw ValidationError(std::string("variant ") + to_string(kind) + " requires alpha != 0");
  if (!is_perturbed(kind) && alpha != 0.0)
    throw ValidationError(std::string("variant ") + to_string(kind) + " requires alpha == 0");
}

// ---------------------------------------------------------------------------
// Labels

struct GroundTruth {
  int y_forward = 0;
  int y_reverse = 1;
  int y_instructional = 0;

  static GroundTruth from_forward(int y) { return {y, 1 - y, y}; }
  bool consistent() const {
    return (y_forward == 0 || y_forward == 1) && y_reverse == 1 - y_forward &&
           y_instructional == y_forward;
  }
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Physical setting alpha maps to. For ratio factors `value` is
/// changed/reference; for luminance it is luma(changed) - luma(reference);
/// for curvature/alignment it is a signed distance in scene units.
struct FactorSetting {
  ControllingFactor factor;
  double value;
};

/// Sign convention: alpha > 0 moves the changed target in the direction the
/// classic illusion makes it look (longer, lighter, bowed/offset as perceived);
/// alpha < 0 goes against the percept.
inline FactorSetting map_alpha_for(const CaseDescriptor& d, double alpha) {
  if (!std::isfinite(alpha) || alpha < -1.0 || alpha > 1.0)
    throw ValidationError("alpha outside [-1, 1]");
  switch (d.controlling_factor) {
    case ControllingFactor::size_ratio:
    case ControllingFactor::line_length:
      return {d.controlling_factor, 1.0 + alpha * d.max_delta};
    default:
      return {d.controlling_factor, alpha * d.max_delta};
  }
}

/// Neutral value of a factor (the Original's setting).
inline double neutral_value(ControllingFactor f) {
  return (f == ControllingFactor::size_ratio || f == ControllingFactor::line_length) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Style

/// Illusion-irrelevant presentation parameters. A pure function of `seed`
/// (see style_from_seed), so a manifest can store only the seed.
struct StyleParams {
  std::uint64_t seed = 0;
  int background_index = 0;
  int accent_index = 0;
  double jitter_x = 0, jitter_y = 0;
  friend bool operator==(const StyleParams&, const StyleParams&) = default;
};

struct Palette {
  static constexpr std::array<Color, 6> backgrounds = {
      Color{1.0, 1.0, 1.0},     Color{1.0, 0.98, 0.94},  Color{0.95, 0.97, 1.0},
      Color{0.94, 0.99, 0.95},  Color{0.97, 0.95, 1.0},  Color{1.0, 0.96, 0.93}};
  // Deliberately excludes black, red and orange: those name targets in questions.
  static constexpr std::array<Color, 8> accents = {
      Color{0.45, 0.45, 0.45}, Color{0.12, 0.20, 0.55}, Color{0.0, 0.45, 0.45},
      Color{0.10, 0.42, 0.15}, Color{0.40, 0.20, 0.55}, Color{0.45, 0.30, 0.15},
      Color{0.30, 0.35, 0.42}, Color{0.42, 0.45, 0.10}};
  static constexpr double jitter_step = 8.0;
  static constexpr int jitter_steps = 3;  // offsets in {-24, ..., 24}
  static constexpr double max_jitter = jitter_step * jitter_steps;

  static constexpr std::size_t space_size() {
    constexpr std::size_t j = 2 * jitter_steps + 1;
    return backgrounds.size() * accents.size() * j * j;
  }
};

/// Seed 0 is the default style; any other seed derives palette and jitter.
inline StyleParams style_from_seed(std::uint64_t seed) {
  StyleParams s;
  s.seed = seed;
  if (seed == 0) return s;
  std::mt19937_64 rng(seed);
  s.background_index = static_cast<int>(util::uniform_index(rng, Palette::backgrounds.size()));
  s.accent_index = static_cast<int>(util::uniform_index(rng, Palette::accents.size()));
  const auto steps = static_cast<std::size_t>(2 * Palette::jitter_steps + 1);
  s.jitter_x = (static_cast<int>(util::uniform_index(rng, steps)) - Palette::jitter_steps) * Palette::jitter_step;
  s.jitter_y = (static_cast<int>(util::uniform_index(rng, steps)) - Palette::jitter_steps) * Palette::jitter_step;
  return s;
}

/// Rejects style parameters that could move geometry off the layout margin.
inline void validate_style(const StyleParams& s) {
  if (s.background_index < 0 || s.background_index >= static_cast<int>(Palette::backgrounds.size()))
    throw ValidationError("style: background index out of range");
  if (s.accent_index < 0 || s.accent_index >= static_cast<int>(Palette::accents.size()))
    throw ValidationError("style: accent index out of range");
  if (!std::isfinite(s.jitter_x) || !std::isfinite(s.jitter_y) ||
      std::abs(s.jitter_x) > Palette::max_jitter || std::abs(s.jitter_y) > Palette::max_jitter)
    throw ValidationError("style: layout jitter exceeds the margin reserved for the controlled factor");
}

inline std::string style_key(const StyleParams& s) {
  return std::to_string(s.background_index) + "/" + std::to_string(s.accent_index) + "/" +
         util::format_number(s.jitter_x) + "/" + util::format_number(s.jitter_y);
}

// ---------------------------------------------------------------------------
// Catalog

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CaseDescriptor> cases) : cases_(std::move(cases)) { check(); }

  static const Catalog& builtin();

  const std::vector<CaseDescriptor>& cases() const { return cases_; }

  const CaseDescriptor& at(int case_id) const {
    for (const auto& c : cases_)
      if (c.case_id == case_id) return c;
    throw ValidationError("unknown case id: " + std::to_string(case_id));
  }
  bool contains(int case_id) const {
    for (const auto& c : cases_)
      if (c.case_id == case_id) return true;
    return false;
  }

  FactorSetting map_alpha(int case_id, double alpha) const { return map_alpha_for(at(case_id), alpha); }

  GroundTruth ground_truth(int case_id, VariantKind kind, double alpha) const {
    const auto& d = at(case_id);
    check_kind_alpha(kind, alpha);
    if (kind == VariantKind::IND) return GroundTruth::from_forward(d.inducer_only_label);
    const int classic = d.classic_forward_label;
    return GroundTruth::from_forward(is_perturbed(kind) ? 1 - classic : classic);
  }

  std::map<Category, int> category_histogram() const {
    std::map<Category, int> h;
    for (const auto& c : cases_) ++h[c.category];
    return h;
  }

  nlohmann::json to_json() const {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : cases_) {
      cases.push_back({{"case_id", c.case_id},
                       {"name", c.name},
                       {"category", to_string(c.category)},
                       {"forward_question", c.forward_question},
                       {"reverse_question", c.reverse_question},
                       {"classic_forward_label", c.classic_forward_label},
                       {"inducer_only_label", c.inducer_only_label},
                       {"controlling_factor", to_string(c.controlling_factor)},
                       {"max_delta", c.max_delta}});
    }
    return {{"catalog_version", kCatalogVersion}, {"generator_version", kGeneratorVersion},
            {"cases", cases}};
  }

  static Catalog from_json(const nlohmann::json& j) {
    if (j.at("catalog_version").get<int>() != kCatalogVersion)
      throw ValidationError("unsupported catalog version");
    std::vector<CaseDescriptor> cases;
    for (const auto& c : j.at("cases")) {
      CaseDescriptor d;
      d.case_id = c.at("case_id").get<int>();
      d.name = c.at("name").get<std::string>();
      d.category = category_from_string(c.at("category").get<std::string>());
      d.forward_question = c.at("forward_question").get<std::string>();
      d.reverse_question = c.at("reverse_question").get<std::string>();
      d.classic_forward_label = c.at("classic_forward_label").get<int>();
      d.inducer_only_label = c.at("inducer_only_label").get<int>();
      d.controlling_factor = factor_from_string(c.at("controlling_factor").get<std::string>());
      d.max_delta = c.at("max_delta").get<double>();
      cases.push_back(std::move(d));
    }
    return Catalog(std::move(cases));
  }

 private:
  void check() const {
    std::map<int, int> seen;
    for (const auto& c : cases_) {
      if (++seen[c.case_id] > 1) throw ValidationError("duplicate case id " + std::to_string(c.case_id));
      if (c.classic_forward_label != 0 && c.classic_forward_label != 1)
        throw ValidationError("classic label must be binary");
      if (!(c.max_delta > 0)) throw ValidationError("max_delta must be > 0");
      const bool ratio = c.controlling_factor == ControllingFactor::size_ratio ||
                         c.controlling_factor == ControllingFactor::line_length;
      if (ratio && c.max_delta >= 1.0)
        throw ValidationError("ratio max_delta must be < 1 so every ratio stays positive");
    }
  }

  std::vector<CaseDescriptor> cases_;
};

namespace catalog_detail {

inline CaseDescriptor make(int id, const char* name, Category cat, const char* fwd, const char* rev,
                           int classic, ControllingFactor factor) {
  double delta = 0;
  switch (factor) {
    case ControllingFactor::size_ratio:
    case ControllingFactor::line_length: delta = 0.5; break;
    case ControllingFactor::luminance: delta = 0.25; break;
    case ControllingFactor::curvature: delta = 16.0; break;
    case ControllingFactor::alignment: delta = 20.0; break;
  }
  return {id, name, cat, fwd, rev, classic, classic, factor, delta};
}

}  // namespace catalog_detail

inline const Catalog& Catalog::builtin() {
  using catalog_detail::make;
  using C = Category;
  using F = ControllingFactor;
  static const Catalog catalog(std::vector<CaseDescriptor>{
      make(1, "Müller Lyer Illusion", C::size, "Are the two black lines of equal length?",
           "Are the two black lines different in length?", 1, F::line_length),
      make(2, "Circle Müller Lyer Illusion", C::size, "Are the two black lines of equal length?",
           "Are the two black lines different in length?", 1, F::line_length),
      make(3, "Ponzo Illusion", C::size, "Are the two horizontal black lines of equal length?",
           "Are the two horizontal black lines different in length?", 1, F::line_length),
      make(4, "Ponzo Trapezoid Illusion", C::size,
           "Are the two horizontal black lines of equal length?",
           "Are the two horizontal black lines different in length?", 1, F::line_length),
      make(5, "Ebbinghaus Illusion", C::size, "Are the two orange circles the same size?",
           "Are the two orange circles different in size?", 1, F::size_ratio),
      make(6, "Ebbinghaus Illusion Rectangular", C::size, "Are the two orange circles the same size?",
           "Are the two orange circles different in size?", 1, F::size_ratio),
      make(7, "Delboeuf Illusion", C::size, "Are the two solid circles the same size?",
           "Are the two solid circles different in size?", 1, F::size_ratio),
      make(8, "Oppel Kundt Illusion", C::size,
           "Are the distances between the vertical markers labeled A–B and B–C equal?",
           "Are the distances between the vertical markers labeled A–B and B–C different?", 1,
           F::line_length),
      make(9, "Irradiation Illusion", C::size,
           "Are the left white square and the right black square equal in size?",
           "Are the left white square and the right black square different in size?", 1,
           F::size_ratio),
      make(10, "Irradiation Pentagon Illusion", C::size,
           "Are the left white pentagon and the right black pentagon equal in size?",
           "Are the left white pentagon and the right black pentagon different in size?", 1,
           F::size_ratio),
      make(11, "Circle Ponzo Illusion", C::size, "Are the two circles the same size?",
           "Are the two circles different in size?", 1, F::size_ratio),
      make(12, "Cornsweet Illusion", C::color, "Are the two circles of the same color?",
           "Are the two circles of different colors?", 1, F::luminance),
      make(13, "Simultaneous Contrast Illusion", C::color,
           "Are the two small squares of the same color?",
           "Are the two small squares of different colors?", 1, F::luminance),
      make(14, "Munker White Illusion", C::color, "Are the two rectangle the same color?",
           "Are the two rectangles different in color?", 1, F::luminance),
      make(15, "Mach Band Illusion", C::color,
           "Is there a boundary in between every adjecent regions?",
           "Is there any pair of adjacent regions without a boundary in between?", 0, F::luminance),
      make(16, "Mach Band Illusion Case2", C::color,
           "Is there a boundary in between every adjecent regions?",
           "Is there any pair of adjacent regions without a boundary in between?", 0, F::luminance),
      make(17, "Chubb Illusion", C::color, "Are the two circles of the same color?",
           "Are the two circles of different colors?", 1, F::luminance),
      make(18, "Cornsweet Illusion Case1", C::color, "Are the two vertical bands of the same color?",
           "Are the two vertical bands of different colors?", 1, F::luminance),
      make(19, "Hering Illusion", C::orientation, "Are the two horizontal lines straight?",
           "Is at least one of the two horizontal lines curved?", 1, F::curvature),
      make(20, "Hering Illusion Vertical", C::orientation, "Are the two vertical lines straight?",
           "Is at least one of the two vertical lines curved?", 1, F::curvature),
      make(21, "Zöllner Illusion", C::orientation, "Are the those red lines straight?",
           "Is at least one of those red lines curved?", 1, F::curvature),
      make(22, "Zöllner Illusion Vertical", C::orientation, "Are the those red lines straight?",
           "Is at least one of those red lines curved?", 1, F::curvature),
      make(23, "Twisted Cord Illusion", C::orientation, "Are those vertical columns parallel?",
           "Are any of those vertical columns not parallel to each other?", 1, F::curvature),
      make(24, "Twisted Cord Illusion Light", C::orientation, "Are those vertical columns parallel?",
           "Are any of those vertical columns not parallel to each other?", 1, F::curvature),
      make(25, "Poggendorff Illusion", C::orientation,
           "Are the red and black solid diagonal lines aligned?",
           "Are the red and black solid diagonal lines misaligned?", 1, F::alignment),
      make(26, "Poggendorff Horizontal Illusion", C::orientation,
           "Are the red and black solid diagonal lines aligned?",
           "Are the red and black solid diagonal lines misaligned?", 1, F::alignment),
      make(27, "Ehrenstein Illusion", C::orientation,
           "Do the squares on the left and right have straight edges?",
           "Does either of the squares on the left and right have curved edges?", 1, F::curvature),
  });
  return catalog;
}

/// All 27 descriptors in case_id order.
inline const std::vector<CaseDescriptor>& list_cases() { return Catalog::builtin().cases(); }

}  // namespace viprobe
