#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "viprobe/catalog.hpp"
#include "viprobe/generators.hpp"
#include "viprobe/scene.hpp"

namespace viprobe {

struct GeneratedVariant {
  Scene scene;
  GroundTruth truth;
  TargetSpec targets;
};

namespace variant_detail {

inline const Color kHintColor{0.2, 0.6, 1.0};

struct Box {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;
  void add(Point p) {
    x0 = std::min(x0, p.x), y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
  }
  Point centre() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
};

inline Box box_of(const Element& e) {
  Box b;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LineShape>) {
          b.add(s.a), b.add(s.b);
        } else if constexpr (std::is_same_v<T, PolylineShape> || std::is_same_v<T, PolygonShape>) {
          for (auto p : s.points) b.add(p);
        } else if constexpr (std::is_same_v<T, CircleShape>) {
          b.add(s.center - Point{s.radius, s.radius});
          b.add(s.center + Point{s.radius, s.radius});
        } else {
          b.add(s.origin);
          b.add(s.origin + Point{s.width, s.height});
        }
      },
      e.shape);
  return b;
}

inline std::pair<Point, Point> chord_of(const Element& e) {
  if (auto* l = std::get_if<LineShape>(&e.shape)) return {l->a, l->b};
  if (auto* p = std::get_if<PolylineShape>(&e.shape)) return {p->points.front(), p->points.back()};
  throw ValidationError("element " + e.id + " has no chord");
}

inline Element hint_line(std::string id, Point a, Point b, double width, Color c) {
  return Element{std::move(id), Role::hint, LineShape{a, b}, Stroke{width, c}, std::nullopt};
}

inline const Element& element(const std::vector<Element>& els, const std::string& id) {
  for (const auto& e : els)
    if (e.id == id) return e;
  throw ValidationError("missing target " + id);
}

/// Measurement aids that do not touch targets or inducers: ticks at target
/// extremes (size), a reference-colour bridge (color), straight chords and
/// line extensions (orientation).
inline std::vector<Element> make_hints(const CaseDescriptor& d, const CaseGeometry& g) {
  std::vector<Element> hints;
  const auto& t = g.targets;
  switch (d.category) {
    case Category::size:
      for (const auto& id : t.all) {
        const Box b = box_of(element(g.elements, id));
        const double cy = b.centre().y, half = (b.y1 - b.y0) / 2 + 14;
        const auto stem = "hint." + id.substr(id.find('.') + 1);
        hints.push_back(hint_line(stem + "_tick_left", {b.x0, cy - half}, {b.x0, cy + half}, 2, kHintColor));
        hints.push_back(hint_line(stem + "_tick_right", {b.x1, cy - half}, {b.x1, cy + half}, 2, kHintColor));
      }
      break;
    case Category::color: {
      const Element& ref = element(g.elements, t.reference);
      const Element& chg = element(g.elements, t.changed);
      hints.push_back(hint_line("hint.bridge", box_of(ref).centre(), box_of(chg).centre(), 8,
                                ref.fill.value_or(Color::gray(0.5))));
      break;
    }
    case Category::orientation:
      if (t.measure == MeasureKind::alignment_offset) {
        const auto [ra, rb] = chord_of(element(g.elements, t.reference));
        const auto [ca, cb] = chord_of(element(g.elements, t.changed));
        const Point dir = rb - ra;
        const double far = dot(cb - ra, dir) / dot(dir, dir);
        hints.push_back(hint_line("hint.extension", ra, ra + dir * far, 1.5, kHintColor));
      } else {
        for (const auto& id : t.all) {
          const auto [a, b] = chord_of(element(g.elements, id));
          hints.push_back(hint_line("hint." + id.substr(id.find('.') + 1) + "_chord", a, b, 1.5, kHintColor));
        }
      }
      break;
  }
  return hints;
}

inline bool keep(Role role, VariantKind kind) {
  switch (kind) {
    case VariantKind::O:
    case VariantKind::P: return role != Role::hint;
    case VariantKind::OC:
    case VariantKind::PC: return role == Role::target || role == Role::decoration;
    case VariantKind::OH:
    case VariantKind::PH: return true;
    case VariantKind::IND: return role == Role::inducer;
  }
  return false;
}

}  // namespace variant_detail

/// One stimulus: layout at map_alpha(case, alpha) filtered to the kind's roles.
/// Controls drop inducers and hints; IND keeps only inducers; hinted kinds add
/// hints on top of the full illusion.
inline GeneratedVariant generate_variant(int case_id, VariantKind kind, double alpha, const StyleParams& style,
                                         const Catalog& catalog = Catalog::builtin()) {
  check_kind_alpha(kind, alpha);
  validate_style(style);
  const auto& d = catalog.at(case_id);
  Scene scene;
  scene.canvas.background = Palette::backgrounds[static_cast<std::size_t>(style.background_index)];
  CaseGeometry g = build_case(d, catalog.map_alpha(case_id, alpha), style, scene.canvas);
  auto hints = variant_detail::make_hints(d, g);
  for (auto& e : g.elements)
    if (variant_detail::keep(e.role, kind)) scene.elements.push_back(std::move(e));
  if (is_hinted(kind))
    for (auto& h : hints) scene.elements.push_back(std::move(h));
  scene.provenance = Provenance{case_id, to_string(kind), alpha, style.seed, kGeneratorVersion};
  validate(scene);
  return {std::move(scene), catalog.ground_truth(case_id, kind, alpha), std::move(g.targets)};
}

inline GeneratedVariant generate_variant(int case_id, VariantKind kind, double alpha, std::uint64_t style_seed,
                                         const Catalog& catalog = Catalog::builtin()) {
  return generate_variant(case_id, kind, alpha, style_from_seed(style_seed), catalog);
}

/// Ids of inducer elements. Rejects scenes that were not generated for `case_id`.
inline std::vector<std::string> inducer_ids(int case_id, const Scene& scene) {
  if (!scene.provenance || scene.provenance->case_id != case_id)
    throw ValidationError("scene was not generated for case " + std::to_string(case_id));
  std::vector<std::string> ids;
  for (const auto& e : scene.elements)
    if (e.role == Role::inducer) ids.push_back(e.id);
  return ids;
}

/// Target layout (ids and measure) for a case; independent of alpha and style.
inline TargetSpec target_spec(int case_id, const Catalog& catalog = Catalog::builtin()) {
  const auto& d = catalog.at(case_id);
  return build_case(d, catalog.map_alpha(case_id, 0.0), StyleParams{}, Canvas{}).targets;
}

/// Recovers the factor setting from scene geometry alone. Comparable with
/// Catalog::map_alpha(case, alpha).value.
inline double measured_setting(int case_id, const Scene& scene, const Catalog& catalog = Catalog::builtin()) {
  const auto spec = target_spec(case_id, catalog);
  const auto& d = catalog.at(case_id);
  switch (d.controlling_factor) {
    case ControllingFactor::size_ratio:
    case ControllingFactor::line_length:
      return measure(scene, spec.changed, spec.measure).value / measure(scene, spec.reference, spec.measure).value;
    case ControllingFactor::luminance:
      return measure(scene, spec.changed, MeasureKind::mean_luminance).value -
             measure(scene, spec.reference, MeasureKind::mean_luminance).value;
    case ControllingFactor::alignment:
      return measure(scene, spec.changed, MeasureKind::alignment_offset, spec.reference).value;
    case ControllingFactor::curvature: {
      const double mag = measure(scene, spec.changed, MeasureKind::curvature_max).value;
      const Element* e = scene.find(spec.changed);
      const auto* poly = std::get_if<PolylineShape>(&e->shape);
      if (!poly || mag == 0) return 0;
      const Point a = poly->points.front(), chord = poly->points.back() - a;
      double best = 0;
      for (auto p : poly->points) {
        const double c = cross(chord, p - a);
        if (std::abs(c) > std::abs(best)) best = c;
      }
      return best < 0 ? -mag : mag;
    }
  }
  return 0;
}

}  // namespace viprobe
