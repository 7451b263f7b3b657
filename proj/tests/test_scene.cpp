#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "viprobe/scene.hpp"
#include "viprobe/svg.hpp"

using namespace viprobe;

namespace {

Element line(std::string id, Point a, Point b, Role role = Role::target) {
  return {std::move(id), role, LineShape{a, b}, {2, Color::black()}, std::nullopt};
}

Scene sample_scene() {
  Scene s;
  s.canvas = {200, 100, Color::white()};
  s.elements.push_back(line("t.a", {10, 10}, {110, 10}));
  s.elements.push_back({"i.c", Role::inducer, CircleShape{{50, 50}, 20}, {1, Color::gray(0.3)}, Color{0.2, 0.4, 0.6}});
  s.elements.push_back({"d.r", Role::decoration, RectShape{{120, 20}, 30, 40}, {}, Color::gray(0.5)});
  s.elements.push_back({"d.g", Role::decoration,
                        GradientRegionShape{{150, 0}, 50, 100, {Color::black(), Color::white(), {150, 0}, {200, 0}}},
                        {},
                        std::nullopt});
  s.elements.push_back(
      {"h.p", Role::hint, PolylineShape{{{0, 90}, {50, 80}, {100, 90}}}, {1.5, Color{0, 0, 1}}, std::nullopt});
  return s;
}

}  // namespace

TEST(SceneValidate, AcceptsWellFormedScene) { EXPECT_NO_THROW(validate(sample_scene())); }

TEST(SceneValidate, RejectsDuplicateIds) {
  auto s = sample_scene();
  s.elements.push_back(line("t.a", {0, 0}, {1, 1}));
  EXPECT_THROW(validate(s), ValidationError);
}

TEST(SceneValidate, RejectsGeometryOutsideCanvas) {
  auto s = sample_scene();
  s.elements.push_back(line("t.out", {0, 0}, {250, 10}));
  EXPECT_THROW(validate(s), ValidationError);
}

TEST(SceneValidate, RejectsNonFiniteAndDegenerate) {
  auto s = sample_scene();
  s.elements.push_back(line("t.nan", {0, 0}, {std::nan(""), 10}));
  EXPECT_THROW(validate(s), ValidationError);

  Scene zero;
  zero.canvas.width = 0;
  EXPECT_THROW(validate(zero), ValidationError);

  auto diag = sample_scene();
  diag.elements.push_back({"g.bad", Role::decoration,
                           GradientRegionShape{{0, 0}, 10, 10, {Color::black(), Color::white(), {0, 0}, {10, 10}}},
                           {},
                           std::nullopt});
  EXPECT_THROW(validate(diag), ValidationError);
}

TEST(SceneSerialize, CanonicalAndRoundTrips) {
  const auto s = sample_scene();
  const auto text = serialize(s);
  EXPECT_EQ(text, serialize(sample_scene()));
  const auto back = scene_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, s);
  EXPECT_EQ(serialize(back), text);
}

TEST(SceneSerialize, ProvenanceSurvivesRoundTrip) {
  auto s = sample_scene();
  s.provenance = Provenance{3, "P", -0.4, 17, "v-test"};
  EXPECT_EQ(scene_from_json(nlohmann::json::parse(serialize(s))), s);
}

TEST(Measure, PythagoreanLength) {
  Scene s;
  s.elements.push_back(line("l", {0, 0}, {3, 4}));
  EXPECT_DOUBLE_EQ(measure(s, "l", MeasureKind::length).value, 5.0);
}

TEST(Measure, CircleDiameterAndArea) {
  Scene s;
  s.elements.push_back({"c", Role::target, CircleShape{{50, 50}, 7}, {}, Color::black()});
  EXPECT_DOUBLE_EQ(measure(s, "c", MeasureKind::diameter).value, 14.0);
  EXPECT_DOUBLE_EQ(measure(s, "c", MeasureKind::area).value, std::numbers::pi * 49);
}

TEST(Measure, PolygonAreaIsOrientationFree) {
  Scene s;
  s.elements.push_back({"cw", Role::target, PolygonShape{{{0, 0}, {0, 10}, {20, 10}, {20, 0}}}, {}, Color::black()});
  s.elements.push_back({"ccw", Role::target, PolygonShape{{{0, 0}, {20, 0}, {20, 10}, {0, 10}}}, {}, Color::black()});
  EXPECT_DOUBLE_EQ(measure(s, "cw", MeasureKind::area).value, 200);
  EXPECT_DOUBLE_EQ(measure(s, "ccw", MeasureKind::area).value, 200);
}

TEST(Measure, CurvatureOfSampledArcEqualsAnalyticSagitta) {
  // Circular arc of radius R over a chord of half-width w: sagitta R - sqrt(R^2 - w^2).
  const double R = 400, w = 150, cx = 384, cy = 700;
  std::vector<Point> pts;
  const int n = 41;  // odd so the apex is sampled
  for (int i = 0; i < n; ++i) {
    const double x = cx - w + 2 * w * i / (n - 1);
    pts.push_back({x, cy - std::sqrt(R * R - (x - cx) * (x - cx))});
  }
  Scene s;
  s.elements.push_back({"arc", Role::target, PolylineShape{pts}, {2, Color::black()}, std::nullopt});
  const double expected = R - std::sqrt(R * R - w * w);
  EXPECT_NEAR(measure(s, "arc", MeasureKind::curvature_max).value, expected, 1e-9);
}

TEST(Measure, AlignmentOffsetIsSignedPerpendicularDistance) {
  Scene s;
  s.elements.push_back(line("ref", {0, 0}, {10, 10}));
  s.elements.push_back(line("other", {20, 20 - 2 * std::sqrt(2.0)}, {30, 30}));
  const double off = measure(s, "other", MeasureKind::alignment_offset, std::string("ref")).value;
  EXPECT_NEAR(std::abs(off), 2.0, 1e-12);
  EXPECT_THROW(measure(s, "other", MeasureKind::alignment_offset), ValidationError);
}

TEST(Measure, MeanLuminanceOfGradientIsAnalyticMean) {
  Scene s;
  s.canvas = {100, 100, Color::white()};
  // Ramp from 0 to 1 across [20, 60], region [0, 100]: mean = (40 * 0.5 + 40 * 1) / 100.
  s.elements.push_back({"g", Role::target,
                        GradientRegionShape{{0, 0}, 100, 10, {Color::black(), Color::white(), {20, 0}, {60, 0}}},
                        {},
                        std::nullopt});
  EXPECT_NEAR(measure(s, "g", MeasureKind::mean_luminance).value, 0.6, 1e-12);
  s.elements.push_back({"f", Role::target, RectShape{{0, 50}, 10, 10}, {}, Color{0.2, 0.4, 0.6}});
  EXPECT_NEAR(measure(s, "f", MeasureKind::mean_luminance).value, 0.2126 * 0.2 + 0.7152 * 0.4 + 0.0722 * 0.6, 1e-12);
}

TEST(Measure, ErrorsOnUnknownIdOrInapplicableKind) {
  const auto s = sample_scene();
  EXPECT_THROW(measure(s, "nope", MeasureKind::length), ValidationError);
  EXPECT_THROW(measure(s, "i.c", MeasureKind::curvature_max), ValidationError);
  EXPECT_THROW(measure(s, "t.a", MeasureKind::diameter), ValidationError);
}

TEST(Measure, IndependentOfCanvasResolution) {
  auto s = sample_scene();
  const double before = measure(s, "t.a", MeasureKind::length).value;
  s.canvas.width = 4000;
  s.canvas.height = 4000;
  EXPECT_EQ(measure(s, "t.a", MeasureKind::length).value, before);
}

TEST(EmitVector, EmptySceneHasOnlyBackground) {
  Scene s;
  const auto svg = emit_vector(s);
  EXPECT_NE(svg.find("<rect x=\"0\" y=\"0\" width=\"768\" height=\"768\" fill=\"#ffffff\"/>"), std::string::npos);
  EXPECT_EQ(svg.find("<path"), std::string::npos);
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
}

TEST(EmitVector, LineBecomesOnePathWithExactEndpoints) {
  Scene s;
  s.elements.push_back(line("l", {12.5, 30}, {100.25, 40}));
  const auto svg = emit_vector(s);
  EXPECT_NE(svg.find("d=\"M 12.5 30 L 100.25 40\""), std::string::npos);
  EXPECT_EQ(svg.find("<path"), svg.rfind("<path"));
}

TEST(EmitVector, DeterministicAndEscapesIds) {
  auto s = sample_scene();
  s.elements.push_back(line("a<&\"b", {0, 0}, {5, 5}));
  EXPECT_EQ(emit_vector(s), emit_vector(s));
  EXPECT_NE(emit_vector(s).find("id=\"a&lt;&amp;&quot;b\""), std::string::npos);
}
