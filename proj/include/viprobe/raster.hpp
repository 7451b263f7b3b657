#pragma once

// Deterministic software rasterizer. Coverage comes from exact signed distance
// fields; only pixels straddling an edge are supersampled on a fixed grid, so
// output depends on nothing but (scene, config).

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "viprobe/scene.hpp"

namespace viprobe {

struct RasterConfig {
  double scale = 1.0;   // pixels per scene unit
  int supersample = 16; // samples per axis on edge pixels (fixed anti-aliasing mode)
};

/// 8-bit RGB, row-major, no padding.
struct RasterImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

namespace raster_detail {

inline double segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + ab * t));
}

inline double path_distance(Point p, std::span<const Point> pts, bool closed) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) d = std::min(d, segment_distance(p, pts[i - 1], pts[i]));
  if (closed && pts.size() > 2) d = std::min(d, segment_distance(p, pts.back(), pts.front()));
  return d;
}

/// Nonzero winding rule.
inline bool inside_polygon(Point p, std::span<const Point> pts) {
  int winding = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point a = pts[i], b = pts[(i + 1) % pts.size()];
    if (a.y <= p.y) {
      if (b.y > p.y && cross(b - a, p - a) > 0) ++winding;
    } else if (b.y <= p.y && cross(b - a, p - a) < 0) {
      --winding;
    }
  }
  return winding != 0;
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;
  void add(Point p) {
    x0 = std::min(x0, p.x), y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
  }
  void grow(double d) { x0 -= d, y0 -= d, x1 += d, y1 += d; }
};

/// Geometry transformed to pixel space. Distances are negative inside.
struct PixelShape {
  std::vector<Point> pts;
  bool closed = false, circle = false, fillable = false, axis_rect = false;
  Point center;
  double radius = 0, stroke_half = 0;

  PixelShape(const Element& e, double scale) : stroke_half(e.stroke.width * scale / 2) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LineShape>) {
            pts = {s.a * scale, s.b * scale};
          } else if constexpr (std::is_same_v<T, PolylineShape>) {
            for (auto p : s.points) pts.push_back(p * scale);
          } else if constexpr (std::is_same_v<T, PolygonShape>) {
            for (auto p : s.points) pts.push_back(p * scale);
            closed = fillable = true;
          } else if constexpr (std::is_same_v<T, CircleShape>) {
            circle = fillable = true;
            center = s.center * scale;
            radius = s.radius * scale;
          } else {
            const Point o = s.origin * scale;
            const double w = s.width * scale, h = s.height * scale;
            pts = {o, {o.x + w, o.y}, {o.x + w, o.y + h}, {o.x, o.y + h}};
            closed = fillable = axis_rect = true;
          }
        },
        e.shape);
  }

  Bounds bounds() const {
    Bounds b;
    if (circle) {
      b.add(center - Point{radius, radius});
      b.add(center + Point{radius, radius});
    } else {
      for (auto p : pts) b.add(p);
    }
    b.grow(stroke_half + 1);
    return b;
  }
};

struct FillField {
  const PixelShape* shape;
  double operator()(Point p) const {
    if (shape->circle) return norm(p - shape->center) - shape->radius;
    const double d = path_distance(p, shape->pts, true);
    return inside_polygon(p, shape->pts) ? -d : d;
  }
  FillField local(Point, double) const { return *this; }

  /// Box overlap for axis-aligned rects.
  std::optional<double> exact(int x, int y) const {
    if (!shape->axis_rect) return std::nullopt;
    auto overlap = [](int base, double lo, double hi) {
      return std::clamp(std::min<double>(base + 1, hi) - std::max<double>(base, lo), 0.0, 1.0);
    };
    return overlap(x, shape->pts[0].x, shape->pts[2].x) * overlap(y, shape->pts[0].y, shape->pts[2].y);
  }

  int hits(int x, int y, int ss) const {
    int n = 0;
    for (int sy = 0; sy < ss; ++sy)
      for (int sx = 0; sx < ss; ++sx)
        if ((*this)(Point{x + (sx + 0.5) / ss, y + (sy + 0.5) / ss}) <= 0) ++n;
    return n;
  }
};

/// Stroke outline as a union of capsules; local() drops segments that
/// cannot reach a disc, which keeps edge supersampling cheap on long paths.
struct StrokeField {
  std::vector<std::pair<Point, Point>> segs;
  bool circle = false;
  Point center;
  double radius = 0, half = 0;

  explicit StrokeField(const PixelShape& s)
      : circle(s.circle), center(s.center), radius(s.radius), half(s.stroke_half) {
    for (std::size_t i = 1; i < s.pts.size(); ++i) segs.emplace_back(s.pts[i - 1], s.pts[i]);
    if (s.closed && s.pts.size() > 2) segs.emplace_back(s.pts.back(), s.pts.front());
    if (s.pts.size() == 1) segs.emplace_back(s.pts[0], s.pts[0]);
  }
  StrokeField() = default;

  double operator()(Point p) const {
    if (circle) return std::abs(norm(p - center) - radius) - half;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : segs) d = std::min(d, segment_distance(p, a, b));
    return d - half;
  }
  StrokeField local(Point c, double reach) const {
    if (circle) return *this;
    StrokeField out;
    out.half = half;
    for (const auto& s : segs)
      if (segment_distance(c, s.first, s.second) - half <= reach) out.segs.push_back(s);
    return out;
  }
  std::optional<double> exact(int, int) const { return std::nullopt; }

  int hits(int x, int y, int ss) const {
    int n = 0;
    for (int sy = 0; sy < ss; ++sy)
      for (int sx = 0; sx < ss; ++sx)
        if ((*this)(Point{x + (sx + 0.5) / ss, y + (sy + 0.5) / ss}) <= 0) ++n;
    return n;
  }
};

/// Area of the unit pixel where d(c) + g.(p - c) <= 0, |g| = 1.
inline double half_plane_coverage(double gx, double gy, double d) {
  double u = std::abs(gx), v = std::abs(gy);
  if (u < v) std::swap(u, v);
  const double t = -d;
  if (v < 1e-9) return std::clamp(t / u + 0.5, 0.0, 1.0);
  auto r = [](double s) { return s > 0 ? s * s / 2 : 0.0; };
  const double a = (u + v) / 2, b = (u - v) / 2;
  return std::clamp((r(t + a) - r(t + b) - r(t - b) + r(t - a)) / (u * v), 0.0, 1.0);
}

/// Exact coverage when the field is an undistorted linear ramp over the pixel
/// (checked on a 3x3 grid), else the fraction of ss x ss samples inside.
template <class Field>
double edge_coverage(const Field& f, int x, int y, double centre, int ss) {
  if (const auto e = f.exact(x, y)) return *e;
  constexpr double tol = 2e-3;
  double d[3][3];
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) d[j][i] = (i == 1 && j == 1) ? centre : f(Point{x + 0.5 * i, y + 0.5 * j});
  const double gx = (d[0][2] + d[2][2] - d[0][0] - d[2][0]) / 2;
  const double gy = (d[2][0] + d[2][2] - d[0][0] - d[0][2]) / 2;
  bool linear = std::abs(std::hypot(gx, gy) - 1) < tol;
  for (int j = 0; j < 3 && linear; ++j)
    for (int i = 0; i < 3 && linear; ++i)
      linear = std::abs(d[j][i] - (centre + gx * (i - 1) * 0.5 + gy * (j - 1) * 0.5)) < tol;
  if (linear) return half_plane_coverage(gx, gy, centre);
  return static_cast<double>(f.hits(x, y, ss)) / (ss * ss);
}

class Accumulator {
 public:
  Accumulator(int w, int h, const Color& bg) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h, bg) {}

  /// Coverage per pixel: 1 or 0 when the pixel centre is farther than half a
  /// pixel diagonal from the edge, otherwise edge_coverage(). Tiles that
  /// cannot touch the shape are skipped whole.
  template <class Field, class Paint>
  void draw(const Bounds& b, int ss, const Field& field, Paint&& paint) {
    constexpr double half_diag = 0.7072;
    constexpr int tile = 16;
    const double tile_reach = tile * half_diag + half_diag;
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y0)));
    const int x1 = std::min(w_ - 1, static_cast<int>(std::ceil(b.x1)));
    const int y1 = std::min(h_ - 1, static_cast<int>(std::ceil(b.y1)));
    for (int ty = y0; ty <= y1; ty += tile) {
      for (int tx = x0; tx <= x1; tx += tile) {
        const Point tc{tx + tile / 2.0, ty + tile / 2.0};
        const double dt = field(tc);
        if (dt >= tile_reach) continue;
        const Field f = field.local(tc, tile_reach);
        const bool solid = dt <= -tile_reach;
        for (int y = ty; y < std::min(ty + tile, y1 + 1); ++y) {
          for (int x = tx; x < std::min(tx + tile, x1 + 1); ++x) {
            const Point c{x + 0.5, y + 0.5};
            double cov = 1;
            if (!solid) {
              const double d = f(c);
              if (d >= half_diag) continue;
              if (d > -half_diag) {
                cov = edge_coverage(f, x, y, d, ss);
                if (cov <= 0) continue;
              }
            }
            auto& dst = px_[static_cast<std::size_t>(y) * w_ + x];
            dst = lerp(dst, paint(c), cov);
          }
        }
      }
    }
  }

  RasterImage finish() const {
    RasterImage img{w_, h_, {}};
    img.rgb.reserve(px_.size() * 3);
    for (const auto& c : px_) {
      img.rgb.push_back(quantize(c.r));
      img.rgb.push_back(quantize(c.g));
      img.rgb.push_back(quantize(c.b));
    }
    return img;
  }

 private:
  int w_, h_;
  std::vector<Color> px_;
};

inline Color gradient_at(const LinearGradient& g, double scale, Point p) {
  const Point a = g.start * scale, b = g.end * scale;
  const Point ab = b - a;
  const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
  return lerp(g.from, g.to, t);
}

}  // namespace raster_detail

/// Paints elements in order over the background. Rejects a zero-size canvas.
inline RasterImage rasterize(const Scene& scene, const RasterConfig& config = {}) {
  using namespace raster_detail;
  if (!(config.scale > 0) || config.supersample < 1)
    throw ValidationError("invalid raster config");
  const long w = std::lround(scene.canvas.width * config.scale);
  const long h = std::lround(scene.canvas.height * config.scale);
  if (w <= 0 || h <= 0) throw ValidationError("degenerate canvas");
  validate(scene);

  Accumulator acc(static_cast<int>(w), static_cast<int>(h), scene.canvas.background);
  for (const auto& e : scene.elements) {
    const PixelShape shape(e, config.scale);
    const auto bounds = shape.bounds();
    if (const auto* g = std::get_if<GradientRegionShape>(&e.shape)) {
      acc.draw(bounds, config.supersample, FillField{&shape},
               [&](Point p) { return gradient_at(g->gradient, config.scale, p); });
    } else if (e.fill && shape.fillable) {
      const Color c = *e.fill;
      acc.draw(bounds, config.supersample, FillField{&shape}, [&](Point) { return c; });
    }
    if (e.stroke.width > 0) {
      const Color c = e.stroke.color;
      acc.draw(bounds, config.supersample, StrokeField(shape), [&](Point) { return c; });
    }
  }
  return acc.finish();
}

// ---------------------------------------------------------------------------
// PNG (8-bit RGB, filter 0, zlib level 6). Same zlib build -> same bytes.

namespace png_detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
                      std::span<const std::uint8_t> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace png_detail

inline std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  using namespace png_detail;
  std::vector<std::uint8_t> raw;
  const std::size_t row = static_cast<std::size_t>(img.width) * 3;
  raw.reserve((row + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const auto* src = img.rgb.data() + row * y;
    raw.insert(raw.end(), src, src + row);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error("png: deflate failed");
  z.resize(zlen);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, RGB, deflate, filter 0, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace viprobe
