#pragma once

// Resolution-independent 2D scene graph. Geometry is kept in abstract scene
// units; only rasterization maps it to pixels.

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "viprobe/util.hpp"

namespace viprobe {

/// sRGB color with components in [0, 1]. Quantized to 8 bits only on output.
struct Color {
  double r = 0, g = 0, b = 0;

  static constexpr Color gray(double v) { return {v, v, v}; }
  static constexpr Color white() { return {1, 1, 1}; }
  static constexpr Color black() { return {0, 0, 0}; }
  friend bool operator==(const Color&, const Color&) = default;
};

/// Rec. 709 luma on the (gamma-encoded) sRGB components.
inline double luma(const Color& c) { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

inline Color lerp(const Color& a, const Color& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct Point {
  double x = 0, y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

enum class Role { target, inducer, hint, decoration };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::target: return "target";
    case Role::inducer: return "inducer";
    case Role::hint: return "hint";
    case Role::decoration: return "decoration";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "target") return Role::target;
  if (s == "inducer") return Role::inducer;
  if (s == "hint") return Role::hint;
  if (s == "decoration") return Role::decoration;
  throw ValidationError("unknown role: " + s);
}

/// Two-stop gradient along an axis-aligned segment; padded outside [start, end].
struct LinearGradient {
  Color from, to;
  Point start, end;
  friend bool operator==(const LinearGradient&, const LinearGradient&) = default;
};

struct LineShape {
  Point a, b;
  friend bool operator==(const LineShape&, const LineShape&) = default;
};
struct PolylineShape {
  std::vector<Point> points;
  friend bool operator==(const PolylineShape&, const PolylineShape&) = default;
};
struct CircleShape {
  Point center;
  double radius = 0;
  friend bool operator==(const CircleShape&, const CircleShape&) = default;
};
struct PolygonShape {
  std::vector<Point> points;
  friend bool operator==(const PolygonShape&, const PolygonShape&) = default;
};
struct RectShape {
  Point origin;
  double width = 0, height = 0;
  friend bool operator==(const RectShape&, const RectShape&) = default;
};
/// Rectangle filled with a linear gradient.
struct GradientRegionShape {
  Point origin;
  double width = 0, height = 0;
  LinearGradient gradient;
  friend bool operator==(const GradientRegionShape&, const GradientRegionShape&) = default;
};

using Shape =
    std::variant<LineShape, PolylineShape, CircleShape, PolygonShape, RectShape, GradientRegionShape>;

struct Stroke {
  double width = 0;  // 0 means no stroke
  Color color;
  friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct Element {
  std::string id;
  Role role = Role::decoration;
  Shape shape;
  Stroke stroke;
  std::optional<Color> fill;  // ignored for lines/polylines and gradient regions
  friend bool operator==(const Element&, const Element&) = default;
};

struct Canvas {
  double width = 768, height = 768;
  Color background = Color::white();
  friend bool operator==(const Canvas&, const Canvas&) = default;
};

/// Where a catalog-generated scene came from.
struct Provenance {
  int case_id = 0;
  std::string kind;
  double alpha = 0;
  std::uint64_t style_seed = 0;
  std::string generator_version;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Scene {
  Canvas canvas;
  std::vector<Element> elements;
  std::optional<Provenance> provenance;

  const Element* find(const std::string& id) const {
    for (const auto& e : elements)
      if (e.id == id) return &e;
    return nullptr;
  }
  friend bool operator==(const Scene&, const Scene&) = default;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline void check_point(const Canvas& c, Point p, const std::string& id) {
  constexpr double slack = 1e-9;
  if (!finite(p)) throw ValidationError("element " + id + ": non-finite coordinate");
  if (p.x < -slack || p.y < -slack || p.x > c.width + slack || p.y > c.height + slack)
    throw ValidationError("element " + id + ": geometry outside canvas bounds");
}

inline void check_gradient(const LinearGradient& g, const std::string& id) {
  const bool horizontal = g.start.y == g.end.y && g.start.x != g.end.x;
  const bool vertical = g.start.x == g.end.x && g.start.y != g.end.y;
  if (!horizontal && !vertical)
    throw ValidationError("element " + id + ": gradient axis must be horizontal or vertical");
}

}  // namespace detail

/// Throws ValidationError on the first violated invariant.
inline void validate(const Scene& scene) {
  const auto& c = scene.canvas;
  if (!(c.width > 0) || !(c.height > 0) || !std::isfinite(c.width) || !std::isfinite(c.height))
    throw ValidationError("degenerate canvas");
  std::set<std::string> ids;
  for (const auto& e : scene.elements) {
    if (e.id.empty()) throw ValidationError("element with empty id");
    if (!ids.insert(e.id).second) throw ValidationError("duplicate element id: " + e.id);
    if (e.stroke.width < 0 || !std::isfinite(e.stroke.width))
      throw ValidationError("element " + e.id + ": bad stroke width");
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LineShape>) {
            detail::check_point(c, s.a, e.id);
            detail::check_point(c, s.b, e.id);
          } else if constexpr (std::is_same_v<T, PolylineShape>) {
            if (s.points.size() < 2) throw ValidationError("polyline " + e.id + " needs 2 points");
            for (auto p : s.points) detail::check_point(c, p, e.id);
          } else if constexpr (std::is_same_v<T, PolygonShape>) {
            if (s.points.size() < 3) throw ValidationError("polygon " + e.id + " needs 3 points");
            for (auto p : s.points) detail::check_point(c, p, e.id);
          } else if constexpr (std::is_same_v<T, CircleShape>) {
            if (!(s.radius > 0)) throw ValidationError("circle " + e.id + ": radius must be > 0");
            detail::check_point(c, s.center - Point{s.radius, s.radius}, e.id);
            detail::check_point(c, s.center + Point{s.radius, s.radius}, e.id);
          } else if constexpr (std::is_same_v<T, RectShape>) {
            if (!(s.width > 0) || !(s.height > 0))
              throw ValidationError("rect " + e.id + ": empty extent");
            detail::check_point(c, s.origin, e.id);
            detail::check_point(c, s.origin + Point{s.width, s.height}, e.id);
          } else {
            if (!(s.width > 0) || !(s.height > 0))
              throw ValidationError("gradient region " + e.id + ": empty extent");
            detail::check_point(c, s.origin, e.id);
            detail::check_point(c, s.origin + Point{s.width, s.height}, e.id);
            detail::check_gradient(s.gradient, e.id);
          }
        },
        e.shape);
  }
}

// ---------------------------------------------------------------------------
// Canonical JSON. nlohmann::json objects are std::map-backed, so keys come out
// sorted and dump() is canonical.

using json = nlohmann::json;

inline json to_json(const Color& c) { return json::array({c.r, c.g, c.b}); }
inline json to_json(Point p) { return json::array({p.x, p.y}); }

inline Color color_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
inline Point point_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json points_to_json(const std::vector<Point>& pts) {
  json a = json::array();
  for (auto p : pts) a.push_back(to_json(p));
  return a;
}
inline std::vector<Point> points_from_json(const json& j) {
  std::vector<Point> pts;
  for (const auto& p : j) pts.push_back(point_from_json(p));
  return pts;
}

inline json to_json(const LinearGradient& g) {
  return {{"from", to_json(g.from)}, {"to", to_json(g.to)}, {"start", to_json(g.start)},
          {"end", to_json(g.end)}};
}

inline json to_json(const Element& e) {
  json j;
  j["id"] = e.id;
  j["role"] = to_string(e.role);
  j["stroke"] = {{"width", e.stroke.width}, {"color", to_json(e.stroke.color)}};
  j["fill"] = e.fill ? to_json(*e.fill) : json(nullptr);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LineShape>) {
          j["shape"] = {{"kind", "line"}, {"a", to_json(s.a)}, {"b", to_json(s.b)}};
        } else if constexpr (std::is_same_v<T, PolylineShape>) {
          j["shape"] = {{"kind", "polyline"}, {"points", points_to_json(s.points)}};
        } else if constexpr (std::is_same_v<T, CircleShape>) {
          j["shape"] = {{"kind", "circle"}, {"center", to_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, PolygonShape>) {
          j["shape"] = {{"kind", "polygon"}, {"points", points_to_json(s.points)}};
        } else if constexpr (std::is_same_v<T, RectShape>) {
          j["shape"] = {{"kind", "rect"}, {"origin", to_json(s.origin)}, {"width", s.width},
                        {"height", s.height}};
        } else {
          j["shape"] = {{"kind", "gradient_region"}, {"origin", to_json(s.origin)},
                        {"width", s.width}, {"height", s.height},
                        {"gradient", to_json(s.gradient)}};
        }
      },
      e.shape);
  return j;
}

inline Element element_from_json(const json& j) {
  Element e;
  e.id = j.at("id").get<std::string>();
  e.role = role_from_string(j.at("role").get<std::string>());
  e.stroke.width = j.at("stroke").at("width").get<double>();
  e.stroke.color = color_from_json(j.at("stroke").at("color"));
  if (!j.at("fill").is_null()) e.fill = color_from_json(j.at("fill"));
  const auto& s = j.at("shape");
  const auto kind = s.at("kind").get<std::string>();
  if (kind == "line") {
    e.shape = LineShape{point_from_json(s.at("a")), point_from_json(s.at("b"))};
  } else if (kind == "polyline") {
    e.shape = PolylineShape{points_from_json(s.at("points"))};
  } else if (kind == "circle") {
    e.shape = CircleShape{point_from_json(s.at("center")), s.at("radius").get<double>()};
  } else if (kind == "polygon") {
    e.shape = PolygonShape{points_from_json(s.at("points"))};
  } else if (kind == "rect") {
    e.shape = RectShape{point_from_json(s.at("origin")), s.at("width").get<double>(),
                        s.at("height").get<double>()};
  } else if (kind == "gradient_region") {
    const auto& g = s.at("gradient");
    e.shape = GradientRegionShape{
        point_from_json(s.at("origin")), s.at("width").get<double>(), s.at("height").get<double>(),
        LinearGradient{color_from_json(g.at("from")), color_from_json(g.at("to")),
                       point_from_json(g.at("start")), point_from_json(g.at("end"))}};
  } else {
    throw ValidationError("unsupported shape kind: " + kind);
  }
  return e;
}

inline json to_json(const Scene& s) {
  json j;
  j["canvas"] = {{"width", s.canvas.width}, {"height", s.canvas.height},
                 {"background", to_json(s.canvas.background)}};
  json elems = json::array();
  for (const auto& e : s.elements) elems.push_back(to_json(e));
  j["elements"] = std::move(elems);
  if (s.provenance) {
    const auto& p = *s.provenance;
    j["provenance"] = {{"case_id", p.case_id}, {"kind", p.kind}, {"alpha", p.alpha},
                       {"style_seed", p.style_seed}, {"generator_version", p.generator_version}};
  }
  return j;
}

inline Scene scene_from_json(const json& j) {
  Scene s;
  const auto& c = j.at("canvas");
  s.canvas = {c.at("width").get<double>(), c.at("height").get<double>(),
              color_from_json(c.at("background"))};
  for (const auto& e : j.at("elements")) s.elements.push_back(element_from_json(e));
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    s.provenance = Provenance{p.at("case_id").get<int>(), p.at("kind").get<std::string>(),
                              p.at("alpha").get<double>(), p.at("style_seed").get<std::uint64_t>(),
                              p.at("generator_version").get<std::string>()};
  }
  return s;
}

/// Canonical serialization: equal scenes produce identical bytes.
inline std::string serialize(const Scene& s) { return to_json(s).dump(); }

// ---------------------------------------------------------------------------
// Scene-space measurement

enum class MeasureKind { length, diameter, area, curvature_max, alignment_offset, mean_luminance };

inline const char* to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::length: return "length";
    case MeasureKind::diameter: return "diameter";
    case MeasureKind::area: return "area";
    case MeasureKind::curvature_max: return "curvature_max";
    case MeasureKind::alignment_offset: return "alignment_offset";
    case MeasureKind::mean_luminance: return "mean_luminance";
  }
  return "?";
}

struct GeometryMeasure {
  std::string element_id;
  MeasureKind kind;
  double value;
};

namespace detail {

inline double polyline_length(const std::vector<Point>& pts, bool closed) {
  double total = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += norm(pts[i] - pts[i - 1]);
  if (closed && pts.size() > 2) total += norm(pts.front() - pts.back());
  return total;
}

/// Max perpendicular distance of any vertex from the endpoint chord.
inline double max_chord_deviation(const std::vector<Point>& pts) {
  const Point a = pts.front(), b = pts.back();
  const Point chord = b - a;
  const double len = norm(chord);
  double best = 0;
  for (auto p : pts) {
    const double d = len > 0 ? std::abs(cross(chord, p - a)) / len : norm(p - a);
    best = std::max(best, d);
  }
  return best;
}

/// Mean of a padded 1-D ramp v(t) = clamp((t - t0) / (t1 - t0), 0, 1) over t in [lo, hi].
inline double mean_clamped_ramp(double lo, double hi, double t0, double t1) {
  if (t1 < t0) {
    // Reflect so the ramp is increasing, then flip the value.
    return 1.0 - mean_clamped_ramp(-hi, -lo, -t0, -t1);
  }
  auto integral = [&](double t) {  // antiderivative of the clamped ramp
    const double w = t1 - t0;
    if (t <= t0) return 0.0;
    if (t <= t1) return (t - t0) * (t - t0) / (2 * w);
    return w / 2 + (t - t1);
  };
  return (integral(hi) - integral(lo)) / (hi - lo);
}

[[noreturn]] inline void inapplicable(const Element& e, MeasureKind k) {
  throw ValidationError(std::string("measure ") + to_string(k) + " not applicable to element " + e.id);
}

}  // namespace detail

/// Exact scene-space measurement of one element. alignment_offset needs a
/// reference line: the result is the signed perpendicular distance of this
/// element's endpoint nearest to the reference from the reference's infinite line.
inline GeometryMeasure measure(const Scene& scene, const std::string& element_id, MeasureKind kind,
                               const std::optional<std::string>& reference_id = std::nullopt) {
  const Element* e = scene.find(element_id);
  if (!e) throw ValidationError("unknown element id: " + element_id);
  double value = 0;
  switch (kind) {
    case MeasureKind::length:
      value = std::visit(
          [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LineShape>) return norm(s.b - s.a);
            else if constexpr (std::is_same_v<T, PolylineShape>) return detail::polyline_length(s.points, false);
            else if constexpr (std::is_same_v<T, PolygonShape>) return detail::polyline_length(s.points, true);
            else if constexpr (std::is_same_v<T, RectShape>) return 2 * (s.width + s.height);
            else if constexpr (std::is_same_v<T, CircleShape>) return 2 * std::numbers::pi * s.radius;
            else detail::inapplicable(*e, kind);
          },
          e->shape);
      break;
    case MeasureKind::diameter:
      if (auto* c = std::get_if<CircleShape>(&e->shape)) value = 2 * c->radius;
      else detail::inapplicable(*e, kind);
      break;
    case MeasureKind::area:
      value = std::visit(
          [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleShape>) return std::numbers::pi * s.radius * s.radius;
            else if constexpr (std::is_same_v<T, RectShape> || std::is_same_v<T, GradientRegionShape>)
              return s.width * s.height;
            else if constexpr (std::is_same_v<T, PolygonShape>) {
              double twice = 0;
              for (std::size_t i = 0; i < s.points.size(); ++i)
                twice += cross(s.points[i], s.points[(i + 1) % s.points.size()]);
              return std::abs(twice) / 2;
            } else detail::inapplicable(*e, kind);
          },
          e->shape);
      break;
    case MeasureKind::curvature_max:
      if (std::holds_alternative<LineShape>(e->shape)) value = 0;
      else if (auto* p = std::get_if<PolylineShape>(&e->shape)) value = detail::max_chord_deviation(p->points);
      else detail::inapplicable(*e, kind);
      break;
    case MeasureKind::alignment_offset: {
      if (!reference_id) throw ValidationError("alignment_offset requires a reference element");
      const Element* r = scene.find(*reference_id);
      if (!r) throw ValidationError("unknown element id: " + *reference_id);
      auto* self = std::get_if<LineShape>(&e->shape);
      auto* ref = std::get_if<LineShape>(&r->shape);
      if (!self || !ref) detail::inapplicable(*e, kind);
      const Point dir = ref->b - ref->a;
      const double len = norm(dir);
      if (len == 0) throw ValidationError("reference line " + r->id + " is degenerate");
      const Point mid = (ref->a + ref->b) * 0.5;
      const Point near = norm(self->a - mid) <= norm(self->b - mid) ? self->a : self->b;
      value = cross(dir, near - ref->a) / len;
      break;
    }
    case MeasureKind::mean_luminance:
      value = std::visit(
          [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GradientRegionShape>) {
              const auto& g = s.gradient;
              const bool horizontal = g.start.y == g.end.y;
              const double lo = horizontal ? s.origin.x : s.origin.y;
              const double hi = lo + (horizontal ? s.width : s.height);
              const double t0 = horizontal ? g.start.x : g.start.y;
              const double t1 = horizontal ? g.end.x : g.end.y;
              const double m = detail::mean_clamped_ramp(lo, hi, t0, t1);
              return luma(g.from) + (luma(g.to) - luma(g.from)) * m;
            } else if constexpr (std::is_same_v<T, LineShape> || std::is_same_v<T, PolylineShape>) {
              return luma(e->stroke.color);
            } else {
              if (e->fill) return luma(*e->fill);
              if (e->stroke.width > 0) return luma(e->stroke.color);
              detail::inapplicable(*e, kind);
            }
          },
          e->shape);
      break;
  }
  return {element_id, kind, value};
}

}  // namespace viprobe
