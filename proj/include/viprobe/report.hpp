#pragma once

// Report files: CSV/JSON tables plus two static plots (dose-response lines,
// PFC decomposition bars). Plots are scenes, so the PNG comes from the same
// rasterizer; the SVG twin additionally carries text labels.

#include <filesystem>
#include <string>
#include <vector>

#include "viprobe/metrics.hpp"
#include "viprobe/raster.hpp"
#include "viprobe/svg.hpp"

namespace viprobe {

namespace plot_detail {

inline const std::array<Color, 6> kSeries = {Color{0.12, 0.38, 0.70}, Color{0.85, 0.37, 0.01}, Color{0.17, 0.63, 0.17},
                                             Color{0.58, 0.40, 0.74}, Color{0.55, 0.34, 0.29}, Color{0.89, 0.47, 0.76}};

struct Frame {
  double left = 70, top = 40, width = 520, height = 300;
  double x0 = -1, x1 = 1, y0 = 0, y1 = 1;
  Point map(double x, double y) const {
    return {left + (x - x0) / (x1 - x0) * width, top + height - (y - y0) / (y1 - y0) * height};
  }
};

struct Label {
  Point at;
  std::string text;
  std::string anchor = "middle";
  double size = 12;
};

struct Plot {
  Scene scene;
  std::vector<Label> labels;
};

inline void axes(Plot& p, const Frame& f, const std::vector<double>& xticks, const std::vector<double>& yticks) {
  auto& el = p.scene.elements;
  const Color ink = Color::gray(0.2), grid = Color::gray(0.88);
  for (double y : yticks) {
    el.push_back({"grid_y_" + std::to_string(el.size()), Role::decoration, LineShape{f.map(f.x0, y), f.map(f.x1, y)},
                  {1, grid}, std::nullopt});
    p.labels.push_back({f.map(f.x0, y) - Point{8, -4}, util::format_number(y * 100, 0), "end", 11});
  }
  for (double x : xticks) {
    const Point b = f.map(x, f.y0);
    el.push_back({"tick_x_" + std::to_string(el.size()), Role::decoration, LineShape{b, b + Point{0, 5}}, {1.5, ink},
                  std::nullopt});
    p.labels.push_back({b + Point{0, 20}, util::format_number(x, 2), "middle", 11});
  }
  el.push_back({"axis_x", Role::decoration, LineShape{f.map(f.x0, f.y0), f.map(f.x1, f.y0)}, {1.5, ink}, std::nullopt});
  el.push_back({"axis_y", Role::decoration, LineShape{f.map(f.x0, f.y0), f.map(f.x0, f.y1)}, {1.5, ink}, std::nullopt});
}

inline std::string svg_with_labels(const Plot& p) {
  std::string svg = emit_vector(p.scene);
  std::string text;
  for (const auto& l : p.labels)
    text += "<text x=\"" + util::format_number(l.at.x, 2) + "\" y=\"" + util::format_number(l.at.y, 2) +
            "\" font-family=\"sans-serif\" font-size=\"" + util::format_number(l.size, 1) + "\" text-anchor=\"" +
            l.anchor + "\">" + svg_detail::escape(l.text) + "</text>\n";
  svg.insert(svg.rfind("</svg>"), text);
  return svg;
}

}  // namespace plot_detail

/// Accuracy vs signed alpha, one line per (model, condition).
inline plot_detail::Plot dose_response_plot(const std::vector<MetricReport>& reports) {
  using namespace plot_detail;
  Plot p;
  p.scene.canvas = {760, 420, Color::white()};
  Frame f;
  axes(p, f, {-1, -0.5, 0, 0.5, 1}, {0, 0.25, 0.5, 0.75, 1});
  p.labels.push_back({{f.left + f.width / 2, 405}, "perturbation strength (alpha)"});
  p.labels.push_back({{f.left + f.width / 2, 24}, "Both-correct accuracy (%) vs perturbation strength", "middle", 14});
  std::size_t series = 0;
  double legend_y = f.top + 10;
  for (const auto& r : reports) {
    for (const auto& c : r.dose) {
      if (c.points.empty()) continue;
      const Color col = kSeries[series % kSeries.size()];
      const std::string id = "series_" + std::to_string(series);
      std::vector<Point> pts;
      for (const auto& d : c.points) pts.push_back(f.map(d.alpha, d.accuracy));
      const double width = c.kind == VariantKind::PC ? 1.5 : 2.5;
      if (pts.size() > 1) p.scene.elements.push_back({id, Role::target, PolylineShape{pts}, {width, col}, std::nullopt});
      for (std::size_t i = 0; i < pts.size(); ++i)
        p.scene.elements.push_back({id + "_pt_" + std::to_string(i), Role::target, CircleShape{pts[i], 3.5}, {}, col});
      const Point lg{f.left + f.width + 20, legend_y};
      p.scene.elements.push_back({id + "_legend", Role::decoration, LineShape{lg, lg + Point{22, 0}}, {width, col},
                                  std::nullopt});
      p.labels.push_back({lg + Point{28, 4}, r.model + " " + to_string(c.kind), "start", 11});
      legend_y += 18;
      ++series;
    }
  }
  return p;
}

/// One stacked bar per model: both-correct, coherent-but-wrong, fixated, invalid.
inline plot_detail::Plot pfc_decomposition_plot(const std::vector<MetricReport>& reports) {
  using namespace plot_detail;
  Plot p;
  p.scene.canvas = {760, 420, Color::white()};
  Frame f;
  f.x0 = 0, f.x1 = std::max<double>(1, static_cast<double>(reports.size()));
  axes(p, f, {}, {0, 0.25, 0.5, 0.75, 1});
  p.labels.push_back({{f.left + f.width / 2, 24}, "Paired-prompt decomposition (%)", "middle", 14});
  const char* names[] = {"PFA (both correct)", "CbW (coherent but wrong)", "TFI (same answer twice)", "invalid"};
  const Color cols[] = {Color{0.17, 0.63, 0.17}, Color{0.85, 0.37, 0.01}, Color{0.12, 0.38, 0.70}, Color::gray(0.6)};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& s = reports[i].overall;
    if (!s.pfc) continue;
    const double parts[] = {*s.pfa, *s.cbw, *s.tfi, *s.invalid_rate};
    double base = 0;
    for (int k = 0; k < 4; ++k) {
      if (parts[k] <= 0) continue;
      const Point top_left = f.map(i + 0.2, std::min(1.0, base + parts[k]));
      const Point bottom_right = f.map(i + 0.8, base);
      p.scene.elements.push_back({"bar_" + std::to_string(i) + "_" + std::to_string(k), Role::target,
                                  RectShape{top_left, bottom_right.x - top_left.x, bottom_right.y - top_left.y}, {},
                                  cols[k]});
      base += parts[k];
    }
    p.labels.push_back({f.map(i + 0.5, 0) + Point{0, 20}, reports[i].model, "middle", 11});
  }
  for (int k = 0; k < 4; ++k) {
    const Point lg{f.left + f.width + 20, f.top + 10 + 20.0 * k};
    p.scene.elements.push_back(
        {"legend_" + std::to_string(k), Role::decoration, RectShape{lg - Point{0, 6}, 14, 12}, {}, cols[k]});
    p.labels.push_back({lg + Point{20, 4}, names[k], "start", 11});
  }
  return p;
}

inline void write_plot(const plot_detail::Plot& p, const std::filesystem::path& stem) {
  util::write_file_atomic(stem.string() + ".svg", plot_detail::svg_with_labels(p));
  const auto png = encode_png(rasterize(p.scene));
  util::write_file_atomic(stem.string() + ".png", std::span<const std::uint8_t>(png));
}

/// Writes every report artifact into `dir`; identical inputs give identical bytes.
inline std::vector<std::filesystem::path> write_report(const std::vector<MetricReport>& reports,
                                                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  auto put = [&](const std::string& name, const std::string& text) {
    util::write_file_atomic(dir / name, text);
    out.push_back(dir / name);
  };
  put("table.csv", table_csv(reports));
  put("categories.csv", category_csv(reports));
  put("interventions.csv", intervention_csv(reports));
  put("dose_response.csv", dose_csv(reports));
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(to_json(r));
  put("report.json", j.dump(2) + "\n");
  write_plot(dose_response_plot(reports), dir / "dose_response");
  write_plot(pfc_decomposition_plot(reports), dir / "pfc_decomposition");
  for (const char* stem : {"dose_response", "pfc_decomposition"}) {
    out.push_back(dir / (std::string(stem) + ".svg"));
    out.push_back(dir / (std::string(stem) + ".png"));
  }
  return out;
}

}  // namespace viprobe
