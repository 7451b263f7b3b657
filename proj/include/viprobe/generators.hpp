#pragma once

// Parametric layouts for the 27 illusion cases. Each builder lays out targets,
// inducers and decorations around the (jittered) canvas centre; hints are
// derived separately from the targets (see variants.hpp).

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "viprobe/catalog.hpp"
#include "viprobe/scene.hpp"

namespace viprobe {

/// Which targets carry the controlled factor and how to measure it.
struct TargetSpec {
  std::string changed;    // target altered by alpha
  std::string reference;  // its unaltered comparison target (empty for curvature cases)
  MeasureKind measure = MeasureKind::length;
  std::vector<std::string> all;  // every target id, in draw order
};

struct CaseGeometry {
  std::vector<Element> elements;  // targets, inducers and decorations in draw order
  TargetSpec targets;
};

namespace gen {

inline constexpr double kPi = std::numbers::pi;
inline const Color kBlack = Color::black();
inline const Color kOrange{1.0, 0.55, 0.0};
inline const Color kRed{0.85, 0.1, 0.1};

class Layout {
 public:
  explicit Layout(Point origin) : origin_(origin) {}

  Point at(double dx, double dy) const { return {origin_.x + dx, origin_.y + dy}; }
  Point origin() const { return origin_; }

  void line(std::string id, Role role, Point a, Point b, double width, Color color) {
    add(std::move(id), role, LineShape{a, b}, {width, color}, std::nullopt);
  }
  void polyline(std::string id, Role role, std::vector<Point> pts, double width, Color color) {
    add(std::move(id), role, PolylineShape{std::move(pts)}, {width, color}, std::nullopt);
  }
  void circle(std::string id, Role role, Point c, double r, std::optional<Color> fill, Stroke stroke = {}) {
    add(std::move(id), role, CircleShape{c, r}, stroke, fill);
  }
  void rect(std::string id, Role role, Point o, double w, double h, std::optional<Color> fill,
            Stroke stroke = {}) {
    add(std::move(id), role, RectShape{o, w, h}, stroke, fill);
  }
  void polygon(std::string id, Role role, std::vector<Point> pts, std::optional<Color> fill,
               Stroke stroke = {}) {
    add(std::move(id), role, PolygonShape{std::move(pts)}, stroke, fill);
  }
  void gradient(std::string id, Role role, Point o, double w, double h, LinearGradient g) {
    add(std::move(id), role, GradientRegionShape{o, w, h, g}, {}, std::nullopt);
  }

  std::vector<Element> take() { return std::move(elements_); }

 private:
  void add(std::string id, Role role, Shape shape, Stroke stroke, std::optional<Color> fill) {
    elements_.push_back(Element{std::move(id), role, std::move(shape), stroke, fill});
  }

  Point origin_;
  std::vector<Element> elements_;
};

/// Parabolic bow from a to b with signed sagitta s along the chord's left
/// normal (-dy, dx). Odd sample count so the apex is a vertex.
inline std::vector<Point> bowed(Point a, Point b, double sagitta, int samples = 33) {
  const Point chord = b - a;
  const double len = norm(chord);
  const Point normal{-chord.y / len, chord.x / len};
  std::vector<Point> pts;
  pts.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double u = static_cast<double>(i) / (samples - 1);
    pts.push_back(a + chord * u + normal * (sagitta * 4 * u * (1 - u)));
  }
  // Endpoints and apex exactly on the construction.
  pts.front() = a;
  pts.back() = b;
  pts[samples / 2] = (a + b) * 0.5 + normal * sagitta;
  return pts;
}

inline Point polar(Point c, double r, double angle_deg) {
  const double t = angle_deg * kPi / 180.0;
  return {c.x + r * std::cos(t), c.y + r * std::sin(t)};
}

inline std::vector<Point> regular_polygon(Point c, double circumradius, int sides, double start_deg) {
  std::vector<Point> pts;
  for (int k = 0; k < sides; ++k) pts.push_back(polar(c, circumradius, start_deg + 360.0 * k / sides));
  return pts;
}

inline Color tint(const Color& c, double toward_white) { return lerp(c, Color::white(), toward_white); }

// Stroke glyphs for the A/B/C markers, 14 x 24 units, top-left at p.
inline void glyph(Layout& l, const std::string& id, char ch, Point p) {
  auto q = [&](double x, double y) { return Point{p.x + x, p.y + y}; };
  const Stroke s{2.5, kBlack};
  switch (ch) {
    case 'A':
      l.polyline(id, Role::decoration, {q(0, 24), q(7, 0), q(14, 24)}, s.width, s.color);
      l.line(id + "_bar", Role::decoration, q(3.5, 14), q(10.5, 14), s.width, s.color);
      break;
    case 'B':
      l.polyline(id, Role::decoration,
                 {q(0, 12), q(10, 12), q(14, 15), q(14, 21), q(10, 24), q(0, 24), q(0, 0), q(9, 0),
                  q(13, 3), q(13, 9), q(10, 12)},
                 s.width, s.color);
      break;
    default:
      l.polyline(id, Role::decoration, {q(14, 3), q(11, 0), q(3, 0), q(0, 3), q(0, 21), q(3, 24),
                                        q(11, 24), q(14, 21)},
                 s.width, s.color);
  }
}

struct Context {
  const CaseDescriptor& desc;
  double value;  // FactorSetting::value
  Color accent;
  Layout layout;
};

// ---------------------------------------------------------------------------
// Size

inline TargetSpec muller_lyer(Context& c, bool circles) {
  auto& l = c.layout;
  const double base = 240, r = c.value;
  const double yu = -100, yl = 100;
  const Point ul = l.at(-base / 2, yu), ur = l.at(base / 2, yu);
  const Point ll = l.at(-base * r / 2, yl), lr = l.at(base * r / 2, yl);
  l.line("target.line_upper", Role::target, ul, ur, 5, kBlack);
  l.line("target.line_lower", Role::target, ll, lr, 5, kBlack);
  if (!circles) {
    const double fx = 44 * std::cos(kPi / 6), fy = 44 * std::sin(kPi / 6);
    // Upper: arrowheads (fins point back over the shaft). Lower: tails (fins point away).
    l.polyline("inducer.fin_upper_left", Role::inducer, {ul + Point{fx, -fy}, ul, ul + Point{fx, fy}}, 5, c.accent);
    l.polyline("inducer.fin_upper_right", Role::inducer, {ur + Point{-fx, -fy}, ur, ur + Point{-fx, fy}}, 5, c.accent);
    l.polyline("inducer.fin_lower_left", Role::inducer, {ll + Point{-fx, -fy}, ll, ll + Point{-fx, fy}}, 5, c.accent);
    l.polyline("inducer.fin_lower_right", Role::inducer, {lr + Point{fx, -fy}, lr, lr + Point{fx, fy}}, 5, c.accent);
  } else {
    const double rad = 16;
    const Stroke s{4, c.accent};
    l.circle("inducer.ring_upper_left", Role::inducer, ul + Point{rad, 0}, rad, std::nullopt, s);
    l.circle("inducer.ring_upper_right", Role::inducer, ur - Point{rad, 0}, rad, std::nullopt, s);
    l.circle("inducer.ring_lower_left", Role::inducer, ll - Point{rad, 0}, rad, std::nullopt, s);
    l.circle("inducer.ring_lower_right", Role::inducer, lr + Point{rad, 0}, rad, std::nullopt, s);
  }
  return {"target.line_lower", "target.line_upper", MeasureKind::length,
          {"target.line_upper", "target.line_lower"}};
}

inline void ponzo_rails(Context& c) {
  auto& l = c.layout;
  l.line("inducer.rail_left", Role::inducer, l.at(-230, 270), l.at(-50, -270), 5, c.accent);
  l.line("inducer.rail_right", Role::inducer, l.at(230, 270), l.at(50, -270), 5, c.accent);
}

inline TargetSpec ponzo_lines(Context& c, bool trapezoid) {
  auto& l = c.layout;
  if (trapezoid) {
    l.polygon("inducer.trapezoid", Role::inducer,
              {l.at(-100, -240), l.at(100, -240), l.at(260, 240), l.at(-260, 240)}, std::nullopt,
              Stroke{5, c.accent});
  } else {
    ponzo_rails(c);
  }
  const double base = 150, r = c.value;
  const double yu = trapezoid ? -150 : -140, yl = trapezoid ? 160 : 150;
  l.line("target.line_upper", Role::target, l.at(-base * r / 2, yu), l.at(base * r / 2, yu), 6, kBlack);
  l.line("target.line_lower", Role::target, l.at(-base / 2, yl), l.at(base / 2, yl), 6, kBlack);
  return {"target.line_upper", "target.line_lower", MeasureKind::length,
          {"target.line_upper", "target.line_lower"}};
}

inline TargetSpec ebbinghaus(Context& c, bool squares) {
  auto& l = c.layout;
  const double r0 = 42;
  const Point left = l.at(-180, 0), right = l.at(180, 0);
  // Large surround on the left (target looks smaller), small surround on the right.
  for (int k = 0; k < 6; ++k) {
    const auto id = "inducer.surround_large_" + std::to_string(k);
    if (squares) {
      const Point p = polar(left, 116, 60.0 * k);
      l.rect(id, Role::inducer, p - Point{37, 37}, 74, 74, c.accent);
    } else {
      l.circle(id, Role::inducer, polar(left, 120, 60.0 * k), 46, c.accent);
    }
  }
  for (int k = 0; k < 8; ++k) {
    const auto id = "inducer.surround_small_" + std::to_string(k);
    if (squares) {
      const Point p = polar(right, 92, 45.0 * k);
      l.rect(id, Role::inducer, p - Point{12, 12}, 24, 24, c.accent);
    } else {
      l.circle(id, Role::inducer, polar(right, 91, 45.0 * k), 14, c.accent);
    }
  }
  l.circle("target.circle_left", Role::target, left, r0, kOrange);
  l.circle("target.circle_right", Role::target, right, r0 * c.value, kOrange);
  return {"target.circle_right", "target.circle_left", MeasureKind::diameter,
          {"target.circle_left", "target.circle_right"}};
}

inline TargetSpec delboeuf(Context& c) {
  auto& l = c.layout;
  const double r0 = 50, r = r0 * c.value;
  const Point left = l.at(-170, 0), right = l.at(170, 0);
  const Color solid = Color::gray(0.1);
  l.circle("inducer.ring_tight", Role::inducer, left, r + 12, std::nullopt, Stroke{3, c.accent});
  l.circle("inducer.ring_wide", Role::inducer, right, 2.2 * r0, std::nullopt, Stroke{3, c.accent});
  l.circle("target.circle_left", Role::target, left, r, solid);
  l.circle("target.circle_right", Role::target, right, r0, solid);
  return {"target.circle_left", "target.circle_right", MeasureKind::diameter,
          {"target.circle_left", "target.circle_right"}};
}

inline TargetSpec oppel_kundt(Context& c) {
  auto& l = c.layout;
  const double d0 = 190, ab = d0 * c.value, bc = d0;
  const double xa = -(ab + bc) / 2, xb = xa + ab, xc = xb + bc;
  l.line("target.interval_ab", Role::target, l.at(xa, 0), l.at(xb, 0), 3, kBlack);
  l.line("target.interval_bc", Role::target, l.at(xb, 0), l.at(xc, 0), 3, kBlack);
  const char labels[] = {'A', 'B', 'C'};
  const double xs[] = {xa, xb, xc};
  for (int i = 0; i < 3; ++i) {
    const std::string name(1, static_cast<char>(labels[i] + ('a' - 'A')));
    l.line("decoration.marker_" + name, Role::decoration, l.at(xs[i], -40), l.at(xs[i], 40), 4, kBlack);
    glyph(l, "decoration.label_" + name, labels[i], l.at(xs[i] - 7, -78));
  }
  for (int k = 1; k <= 9; ++k) {
    const double x = xa + ab * k / 10.0;
    l.line("inducer.tick_" + std::to_string(k), Role::inducer, l.at(x, -22), l.at(x, 22), 3, c.accent);
  }
  return {"target.interval_ab", "target.interval_bc", MeasureKind::length,
          {"target.interval_ab", "target.interval_bc"}};
}

inline TargetSpec irradiation(Context& c, bool pentagon) {
  auto& l = c.layout;
  l.rect("inducer.panel_black", Role::inducer, l.at(-300, -160), 300, 320, kBlack);
  l.rect("inducer.panel_white", Role::inducer, l.at(0, -160), 300, 320, Color::white());
  const Stroke outline{1.5, Color::gray(0.5)};
  const Point left = l.at(-150, 0), right = l.at(150, 0);
  if (pentagon) {
    l.polygon("target.shape_white", Role::target, regular_polygon(left, 70 * c.value, 5, -90),
              Color::white(), outline);
    l.polygon("target.shape_black", Role::target, regular_polygon(right, 70, 5, -90), kBlack, outline);
  } else {
    const double s = 110 * c.value;
    l.rect("target.shape_white", Role::target, left - Point{s / 2, s / 2}, s, s, Color::white(), outline);
    l.rect("target.shape_black", Role::target, right - Point{55, 55}, 110, 110, kBlack, outline);
  }
  return {"target.shape_white", "target.shape_black", MeasureKind::length,
          {"target.shape_white", "target.shape_black"}};
}

inline TargetSpec circle_ponzo(Context& c) {
  auto& l = c.layout;
  ponzo_rails(c);
  l.circle("target.circle_upper", Role::target, l.at(0, -130), 40 * c.value, std::nullopt, Stroke{5, kBlack});
  l.circle("target.circle_lower", Role::target, l.at(0, 150), 40, std::nullopt, Stroke{5, kBlack});
  return {"target.circle_upper", "target.circle_lower", MeasureKind::diameter,
          {"target.circle_upper", "target.circle_lower"}};
}

// ---------------------------------------------------------------------------
// Color. Targets share luma 0.5 in the Original; the changed one gets +gap.

inline constexpr double kMidGray = 0.5;

inline TargetSpec cornsweet_circles(Context& c) {
  auto& l = c.layout;
  const double v = kMidGray, gap = c.value;
  l.rect("inducer.surround", Role::inducer, l.at(-330, -200), 660, 400, Color::gray(v));
  const Point left = l.at(-170, 0), right = l.at(170, 0);
  for (int k = 0; k < 8; ++k) {
    const double step = 0.28 - 0.035 * k;
    const double rad = 70 + 1.5 + 3 * k;
    l.circle("inducer.edge_light_" + std::to_string(k), Role::inducer, left, rad, std::nullopt,
             Stroke{3.2, Color::gray(v + step)});
    l.circle("inducer.edge_dark_" + std::to_string(k), Role::inducer, right, rad, std::nullopt,
             Stroke{3.2, Color::gray(v - step)});
  }
  l.circle("target.circle_left", Role::target, left, 70, Color::gray(v + gap));
  l.circle("target.circle_right", Role::target, right, 70, Color::gray(v));
  return {"target.circle_left", "target.circle_right", MeasureKind::mean_luminance,
          {"target.circle_left", "target.circle_right"}};
}

inline TargetSpec simultaneous_contrast(Context& c) {
  auto& l = c.layout;
  l.rect("inducer.panel_dark", Role::inducer, l.at(-300, -150), 290, 300, Color::gray(0.15));
  l.rect("inducer.panel_light", Role::inducer, l.at(10, -150), 290, 300, Color::gray(0.85));
  l.rect("target.square_left", Role::target, l.at(-200, -45), 90, 90, Color::gray(kMidGray + c.value));
  l.rect("target.square_right", Role::target, l.at(110, -45), 90, 90, Color::gray(kMidGray));
  return {"target.square_left", "target.square_right", MeasureKind::mean_luminance,
          {"target.square_left", "target.square_right"}};
}

inline TargetSpec white_illusion(Context& c) {
  auto& l = c.layout;
  for (int k = 0; k < 12; ++k) {
    l.rect("inducer.stripe_" + std::to_string(k), Role::inducer, l.at(-270, -180 + 30.0 * k), 540, 30,
           k % 2 == 0 ? kBlack : Color::white());
  }
  // Left bar sits in black stripe 4, right bar in white stripe 7.
  l.rect("target.bar_left", Role::target, l.at(-200, -60), 120, 30, Color::gray(kMidGray + c.value));
  l.rect("target.bar_right", Role::target, l.at(80, 30), 120, 30, Color::gray(kMidGray));
  return {"target.bar_left", "target.bar_right", MeasureKind::mean_luminance,
          {"target.bar_left", "target.bar_right"}};
}

inline TargetSpec mach_staircase(Context& c) {
  auto& l = c.layout;
  const double x0 = -240, w = 80, y0 = -180, h = 360;
  l.rect("inducer.band_0", Role::inducer, l.at(x0, y0), w, h, Color::gray(0.14));
  l.rect("inducer.band_1", Role::inducer, l.at(x0 + w, y0), w, h, Color::gray(0.32));
  l.rect("target.band_left", Role::target, l.at(x0 + 2 * w, y0), w, h, Color::gray(kMidGray));
  l.rect("target.band_right", Role::target, l.at(x0 + 3 * w, y0), w, h, Color::gray(kMidGray + c.value));
  l.rect("inducer.band_4", Role::inducer, l.at(x0 + 4 * w, y0), w, h, Color::gray(0.68));
  l.rect("inducer.band_5", Role::inducer, l.at(x0 + 5 * w, y0), w, h, Color::gray(0.86));
  return {"target.band_right", "target.band_left", MeasureKind::mean_luminance,
          {"target.band_left", "target.band_right"}};
}

inline TargetSpec mach_ramp(Context& c) {
  auto& l = c.layout;
  const double y0 = -180, h = 360;
  const Point o = l.origin();
  auto horizontal = [&](double x0, double x1, double v0, double v1) {
    return LinearGradient{Color::gray(v0), Color::gray(v1), {o.x + x0, o.y}, {o.x + x1, o.y}};
  };
  l.rect("inducer.plateau_dark", Role::inducer, l.at(-290, y0), 100, h, Color::gray(0.2));
  l.gradient("inducer.ramp_up", Role::inducer, l.at(-190, y0), 100, h, horizontal(-190, -90, 0.2, 0.5));
  l.rect("target.band_left", Role::target, l.at(-90, y0), 90, h, Color::gray(kMidGray));
  l.rect("target.band_right", Role::target, l.at(0, y0), 90, h, Color::gray(kMidGray + c.value));
  l.gradient("inducer.ramp_high", Role::inducer, l.at(90, y0), 100, h, horizontal(90, 190, 0.5, 0.8));
  l.rect("inducer.plateau_light", Role::inducer, l.at(190, y0), 100, h, Color::gray(0.8));
  return {"target.band_right", "target.band_left", MeasureKind::mean_luminance,
          {"target.band_left", "target.band_right"}};
}

inline TargetSpec chubb(Context& c) {
  auto& l = c.layout;
  const Point left = l.at(-170, 0);
  for (int row = 0; row < 10; ++row) {
    for (int col = 0; col < 10; ++col) {
      const Point p = left + Point{-150 + 30.0 * col, -150 + 30.0 * row};
      l.rect("inducer.texture_" + std::to_string(row) + "_" + std::to_string(col), Role::inducer, p, 30,
             30, Color::gray((row + col) % 2 == 0 ? 0.08 : 0.92));
    }
  }
  l.rect("inducer.surround_plain", Role::inducer, l.at(20, -150), 300, 300, Color::gray(0.3));
  l.circle("target.circle_left", Role::target, left, 80, Color::gray(kMidGray));
  l.circle("target.circle_right", Role::target, l.at(170, 0), 80, Color::gray(kMidGray + c.value));
  return {"target.circle_right", "target.circle_left", MeasureKind::mean_luminance,
          {"target.circle_left", "target.circle_right"}};
}

inline TargetSpec cornsweet_bands(Context& c) {
  auto& l = c.layout;
  const double v = kMidGray, y0 = -180, h = 360;
  const Point o = l.origin();
  l.rect("target.band_left", Role::target, l.at(-250, y0), 210, h, Color::gray(v));
  l.gradient("inducer.edge_dark", Role::inducer, l.at(-40, y0), 40, h,
             LinearGradient{Color::gray(v), Color::gray(v - 0.2), {o.x - 40, o.y}, {o.x, o.y}});
  l.gradient("inducer.edge_light", Role::inducer, l.at(0, y0), 40, h,
             LinearGradient{Color::gray(v + 0.2), Color::gray(v), {o.x, o.y}, {o.x + 40, o.y}});
  l.rect("target.band_right", Role::target, l.at(40, y0), 210, h, Color::gray(v + c.value));
  return {"target.band_right", "target.band_left", MeasureKind::mean_luminance,
          {"target.band_left", "target.band_right"}};
}

// ---------------------------------------------------------------------------
// Orientation. Positive value bows the first target along its chord's left
// normal; every target carries the same |bow|.

inline TargetSpec hering(Context& c, bool vertical) {
  auto& l = c.layout;
  const Point o = l.origin();
  for (int k = 0; k < 24; ++k) {
    const double ang = 7.5 * k;
    l.line("inducer.ray_" + std::to_string(k), Role::inducer, polar(o, 330, ang + 180), polar(o, 330, ang), 2,
           c.accent);
  }
  const double s = c.value;
  // Chord directions chosen so positive sagitta bows away from the centre.
  if (!vertical) {
    l.polyline("target.line_upper", Role::target, bowed(l.at(300, -100), l.at(-300, -100), s), 4, kRed);
    l.polyline("target.line_lower", Role::target, bowed(l.at(-300, 100), l.at(300, 100), s), 4, kRed);
    return {"target.line_upper", "", MeasureKind::curvature_max, {"target.line_upper", "target.line_lower"}};
  }
  l.polyline("target.line_left", Role::target, bowed(l.at(-100, -300), l.at(-100, 300), s), 4, kRed);
  l.polyline("target.line_right", Role::target, bowed(l.at(100, 300), l.at(100, -300), s), 4, kRed);
  return {"target.line_left", "", MeasureKind::curvature_max, {"target.line_left", "target.line_right"}};
}

inline TargetSpec zollner(Context& c, bool vertical) {
  auto& l = c.layout;
  const double offsets[] = {-165, -55, 55, 165};
  TargetSpec spec{"", "", MeasureKind::curvature_max, {}};
  for (int i = 0; i < 4; ++i) {
    const double tilt = i % 2 == 0 ? 45 : -45;
    for (int k = 0; k < 13; ++k) {
      const double along = -240 + 40.0 * k;
      const Point centre = vertical ? l.at(offsets[i], along) : l.at(along, offsets[i]);
      const double ang = vertical ? 90 + tilt : tilt;
      l.line("inducer.hatch_" + std::to_string(i) + "_" + std::to_string(k), Role::inducer,
             polar(centre, 25, ang + 180), polar(centre, 25, ang), 3, c.accent);
    }
  }
  for (int i = 0; i < 4; ++i) {
    const double s = i % 2 == 0 ? c.value : -c.value;
    const Point a = vertical ? l.at(offsets[i], -280) : l.at(-280, offsets[i]);
    const Point b = vertical ? l.at(offsets[i], 280) : l.at(280, offsets[i]);
    const auto id = "target.line_" + std::to_string(i);
    l.polyline(id, Role::target, bowed(a, b, s), 4, kRed);
    spec.all.push_back(id);
  }
  spec.changed = spec.all.front();
  return spec;
}

inline TargetSpec twisted_cord(Context& c, bool light) {
  auto& l = c.layout;
  Color strand_a = c.accent, strand_b = tint(c.accent, 0.7), column = Color::gray(0.1);
  if (light) {
    l.rect("inducer.panel", Role::inducer, l.at(-260, -290), 520, 580, Color::gray(0.15));
    strand_a = Color::gray(0.95);
    strand_b = Color::gray(0.7);
    column = Color::gray(0.6);
  }
  TargetSpec spec{"", "", MeasureKind::curvature_max, {}};
  for (int i = 0; i < 5; ++i) {
    const double x = -200 + 100.0 * i;
    const double tilt = i % 2 == 0 ? 30 : -30;
    for (int k = 0; k < 16; ++k) {
      const Point centre = l.at(x, -240 + 32.0 * k);
      l.line("inducer.strand_" + std::to_string(i) + "_" + std::to_string(k), Role::inducer,
             polar(centre, 18, tilt + 180), polar(centre, 18, tilt), 6, k % 2 == 0 ? strand_a : strand_b);
    }
  }
  for (int i = 0; i < 5; ++i) {
    const double x = -200 + 100.0 * i;
    const double s = i % 2 == 0 ? c.value : -c.value;
    const auto id = "target.column_" + std::to_string(i);
    l.polyline(id, Role::target, bowed(l.at(x, -260), l.at(x, 260), s), 3, column);
    spec.all.push_back(id);
  }
  spec.changed = spec.all.front();
  return spec;
}

/// Signed offset of the black segment from the red segment's line; positive
/// shifts it along the red direction's left normal.
inline TargetSpec poggendorff(Context& c, bool horizontal_band) {
  auto& l = c.layout;
  const Point o = l.origin();
  const Color occluder = tint(c.accent, 0.55);
  const double theta = (horizontal_band ? 60.0 : 30.0) * kPi / 180.0;
  const Point dir{std::cos(theta), -std::sin(theta)};
  const Point normal{-dir.y, dir.x};
  Point ra, rb, ba, bb;
  if (!horizontal_band) {
    l.rect("inducer.occluder", Role::inducer, l.at(-60, -220), 120, 440, occluder);
    auto on_line = [&](double dx) { return o + dir * (dx / dir.x); };
    ra = on_line(-280), rb = on_line(-60), ba = on_line(60), bb = on_line(280);
  } else {
    l.rect("inducer.occluder", Role::inducer, l.at(-220, -60), 440, 120, occluder);
    auto on_line = [&](double dy) { return o + dir * (dy / dir.y); };
    ra = on_line(260), rb = on_line(60), ba = on_line(-60), bb = on_line(-260);
  }
  l.line("target.line_red", Role::target, ra, rb, 5, kRed);
  l.line("target.line_black", Role::target, ba + normal * c.value, bb + normal * c.value, 5, kBlack);
  return {"target.line_black", "target.line_red", MeasureKind::alignment_offset,
          {"target.line_red", "target.line_black"}};
}

inline TargetSpec ehrenstein(Context& c) {
  auto& l = c.layout;
  const double half = 85;
  const Point centres[] = {l.at(-185, 0), l.at(185, 0)};
  const char* sides[] = {"left", "right"};
  for (int s = 0; s < 2; ++s)
    for (int k = 1; k <= 12; ++k)
      l.circle("inducer.ring_" + std::string(sides[s]) + "_" + std::to_string(k), Role::inducer, centres[s],
               14.0 * k, std::nullopt, Stroke{2.5, c.accent});
  TargetSpec spec{"", "", MeasureKind::curvature_max, {}};
  const char* edges[] = {"top", "right", "bottom", "left"};
  for (int s = 0; s < 2; ++s) {
    const Point m = centres[s];
    // Clockwise on screen, so the left normal points inward.
    const Point corners[] = {m + Point{-half, -half}, m + Point{half, -half}, m + Point{half, half},
                             m + Point{-half, half}};
    for (int e = 0; e < 4; ++e) {
      const auto id = "target.square_" + std::string(sides[s]) + "_" + edges[e];
      l.polyline(id, Role::target, bowed(corners[e], corners[(e + 1) % 4], c.value), 4, kBlack);
      spec.all.push_back(id);
    }
  }
  spec.changed = spec.all.front();
  return spec;
}

}  // namespace gen

/// Full layout (no hints) for one case at one factor setting. Jitter moves
/// the whole figure; palette touches only illusion-irrelevant colors.
inline CaseGeometry build_case(const CaseDescriptor& d, const FactorSetting& setting, const StyleParams& style,
                               const Canvas& canvas) {
  gen::Context c{d, setting.value, Palette::accents[static_cast<std::size_t>(style.accent_index)],
                 gen::Layout({canvas.width / 2 + style.jitter_x, canvas.height / 2 + style.jitter_y})};
  TargetSpec spec;
  switch (d.case_id) {
    case 1: spec = gen::muller_lyer(c, false); break;
    case 2: spec = gen::muller_lyer(c, true); break;
    case 3: spec = gen::ponzo_lines(c, false); break;
    case 4: spec = gen::ponzo_lines(c, true); break;
    case 5: spec = gen::ebbinghaus(c, false); break;
    case 6: spec = gen::ebbinghaus(c, true); break;
    case 7: spec = gen::delboeuf(c); break;
    case 8: spec = gen::oppel_kundt(c); break;
    case 9: spec = gen::irradiation(c, false); break;
    case 10: spec = gen::irradiation(c, true); break;
    case 11: spec = gen::circle_ponzo(c); break;
    case 12: spec = gen::cornsweet_circles(c); break;
    case 13: spec = gen::simultaneous_contrast(c); break;
    case 14: spec = gen::white_illusion(c); break;
    case 15: spec = gen::mach_staircase(c); break;
    case 16: spec = gen::mach_ramp(c); break;
    case 17: spec = gen::chubb(c); break;
    case 18: spec = gen::cornsweet_bands(c); break;
    case 19: spec = gen::hering(c, false); break;
    case 20: spec = gen::hering(c, true); break;
    case 21: spec = gen::zollner(c, false); break;
    case 22: spec = gen::zollner(c, true); break;
    case 23: spec = gen::twisted_cord(c, false); break;
    case 24: spec = gen::twisted_cord(c, true); break;
    case 25: spec = gen::poggendorff(c, false); break;
    case 26: spec = gen::poggendorff(c, true); break;
    case 27: spec = gen::ehrenstein(c); break;
    default: throw ValidationError("no generator for case " + std::to_string(d.case_id));
  }
  return {c.layout.take(), std::move(spec)};
}

}  // namespace viprobe
