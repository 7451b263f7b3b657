#pragma once

#include <cstdio>
#include <string>

#include "viprobe/scene.hpp"

namespace viprobe {

namespace svg_detail {

inline std::string num(double v) { return util::format_number(v, 6); }

inline std::string hex(const Color& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", quantize(c.r), quantize(c.g), quantize(c.b));
  return buf;
}

inline std::string path_data(const std::vector<Point>& pts, bool closed) {
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d += (i == 0 ? "M " : " L ");
    d += num(pts[i].x) + " " + num(pts[i].y);
  }
  if (closed) d += " Z";
  return d;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace svg_detail

/// SVG 1.1 document for a scene. One SVG element per scene element, in scene
/// order; round caps and joins so the stroke outline equals the rasterizer's.
inline std::string emit_vector(const Scene& scene) {
  using namespace svg_detail;
  validate(scene);
  const auto& c = scene.canvas;
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(c.width) +
         "\" height=\"" + num(c.height) + "\" viewBox=\"0 0 " + num(c.width) + " " + num(c.height) +
         "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(c.width) + "\" height=\"" + num(c.height) +
         "\" fill=\"" + hex(c.background) + "\"/>\n";

  for (const auto& e : scene.elements) {
    const std::string attrs = " id=\"" + escape(e.id) + "\" data-role=\"" + to_string(e.role) + "\"";
    std::string paint;
    const bool open_path =
        std::holds_alternative<LineShape>(e.shape) || std::holds_alternative<PolylineShape>(e.shape);
    if (std::holds_alternative<GradientRegionShape>(e.shape)) {
      paint = " fill=\"url(#grad-" + escape(e.id) + ")\"";
    } else if (e.fill && !open_path) {
      paint = " fill=\"" + hex(*e.fill) + "\"";
    } else {
      paint = " fill=\"none\"";
    }
    if (e.stroke.width > 0) {
      paint += " stroke=\"" + hex(e.stroke.color) + "\" stroke-width=\"" + num(e.stroke.width) +
               "\" stroke-linecap=\"round\" stroke-linejoin=\"round\"";
    }

    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LineShape>) {
            out += "<path" + attrs + " d=\"" + path_data({s.a, s.b}, false) + "\"" + paint + "/>\n";
          } else if constexpr (std::is_same_v<T, PolylineShape>) {
            out += "<path" + attrs + " d=\"" + path_data(s.points, false) + "\"" + paint + "/>\n";
          } else if constexpr (std::is_same_v<T, PolygonShape>) {
            out += "<path" + attrs + " d=\"" + path_data(s.points, true) + "\"" + paint + "/>\n";
          } else if constexpr (std::is_same_v<T, CircleShape>) {
            out += "<circle" + attrs + " cx=\"" + num(s.center.x) + "\" cy=\"" + num(s.center.y) +
                   "\" r=\"" + num(s.radius) + "\"" + paint + "/>\n";
          } else if constexpr (std::is_same_v<T, RectShape>) {
            out += "<rect" + attrs + " x=\"" + num(s.origin.x) + "\" y=\"" + num(s.origin.y) +
                   "\" width=\"" + num(s.width) + "\" height=\"" + num(s.height) + "\"" + paint +
                   "/>\n";
          } else {
            const auto& g = s.gradient;
            out += "<defs><linearGradient id=\"grad-" + escape(e.id) +
                   "\" gradientUnits=\"userSpaceOnUse\" x1=\"" + num(g.start.x) + "\" y1=\"" +
                   num(g.start.y) + "\" x2=\"" + num(g.end.x) + "\" y2=\"" + num(g.end.y) +
                   "\"><stop offset=\"0\" stop-color=\"" + hex(g.from) +
                   "\"/><stop offset=\"1\" stop-color=\"" + hex(g.to) + "\"/></linearGradient></defs>\n";
            out += "<rect" + attrs + " x=\"" + num(s.origin.x) + "\" y=\"" + num(s.origin.y) +
                   "\" width=\"" + num(s.width) + "\" height=\"" + num(s.height) + "\"" + paint +
                   "/>\n";
          }
        },
        e.shape);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace viprobe
