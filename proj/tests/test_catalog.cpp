#include <gtest/gtest.h>

#include <set>

#include "viprobe/catalog.hpp"

using namespace viprobe;

TEST(Catalog, HasTwentySevenCasesInIdOrder) {
  const auto& cases = Catalog::builtin().cases();
  ASSERT_EQ(cases.size(), 27u);
  for (std::size_t i = 0; i < cases.size(); ++i) EXPECT_EQ(cases[i].case_id, static_cast<int>(i + 1));
  EXPECT_EQ(&list_cases(), &cases);
}

TEST(Catalog, CategoryHistogram) {
  const auto h = Catalog::builtin().category_histogram();
  EXPECT_EQ(h.at(Category::size), 11);
  EXPECT_EQ(h.at(Category::color), 7);
  EXPECT_EQ(h.at(Category::orientation), 9);
}

TEST(Catalog, NamesAreUniqueAndQuestionsPresent) {
  std::set<std::string> names;
  for (const auto& c : list_cases()) {
    EXPECT_TRUE(names.insert(c.name).second) << c.name;
    EXPECT_FALSE(c.forward_question.empty());
    EXPECT_FALSE(c.reverse_question.empty());
    EXPECT_NE(c.forward_question, c.reverse_question);
    EXPECT_EQ(c.forward_question.back(), '?');
  }
}

TEST(Catalog, LookupAndUnknownIds) {
  const auto& cat = Catalog::builtin();
  EXPECT_EQ(cat.at(5).name, "Ebbinghaus Illusion");
  EXPECT_TRUE(cat.contains(27));
  EXPECT_FALSE(cat.contains(0));
  EXPECT_FALSE(cat.contains(28));
  EXPECT_THROW(cat.at(28), ValidationError);
}

TEST(Catalog, AlphaMapsLinearlyOntoFactor) {
  const auto& cat = Catalog::builtin();
  for (const auto& c : cat.cases()) {
    const double neutral = neutral_value(c.controlling_factor);
    EXPECT_DOUBLE_EQ(cat.map_alpha(c.case_id, 0).value, neutral);
    for (double a : canonical_alpha_grid()) {
      const auto s = cat.map_alpha(c.case_id, a);
      EXPECT_EQ(s.factor, c.controlling_factor);
      EXPECT_NEAR(s.value, neutral + a * c.max_delta, 1e-12);
    }
    EXPECT_THROW(cat.map_alpha(c.case_id, 1.01), ValidationError);
    EXPECT_THROW(cat.map_alpha(c.case_id, std::nan("")), ValidationError);
  }
}

TEST(Catalog, RatiosStayPositiveAcrossGrid) {
  for (const auto& c : list_cases()) {
    if (neutral_value(c.controlling_factor) != 1.0) continue;
    EXPECT_GT(Catalog::builtin().map_alpha(c.case_id, -1.0).value, 0) << c.case_id;
  }
}

TEST(Catalog, GroundTruthFollowsKindAndClassicLabel) {
  const auto& cat = Catalog::builtin();
  for (const auto& c : cat.cases()) {
    const int y = c.classic_forward_label;
    for (auto k : {VariantKind::O, VariantKind::OC, VariantKind::OH})
      EXPECT_EQ(cat.ground_truth(c.case_id, k, 0), GroundTruth::from_forward(y));
    for (auto k : {VariantKind::P, VariantKind::PC, VariantKind::PH})
      for (double a : {-1.0, -0.2, 0.4})
        EXPECT_EQ(cat.ground_truth(c.case_id, k, a), GroundTruth::from_forward(1 - y));
    EXPECT_EQ(cat.ground_truth(c.case_id, VariantKind::IND, 0), GroundTruth::from_forward(c.inducer_only_label));
    EXPECT_TRUE(cat.ground_truth(c.case_id, VariantKind::P, 1.0).consistent());
  }
}

TEST(Catalog, KindAlphaPairingIsEnforced) {
  const auto& cat = Catalog::builtin();
  EXPECT_THROW(cat.ground_truth(1, VariantKind::P, 0), ValidationError);
  EXPECT_THROW(cat.ground_truth(1, VariantKind::O, 0.2), ValidationError);
  EXPECT_THROW(cat.ground_truth(1, VariantKind::IND, -0.2), ValidationError);
}

TEST(Catalog, KindHelpers) {
  EXPECT_EQ(kind_from_string("PH"), VariantKind::PH);
  EXPECT_THROW(kind_from_string("X"), ValidationError);
  EXPECT_EQ(base_kind(VariantKind::PC), VariantKind::P);
  EXPECT_EQ(base_kind(VariantKind::OH), VariantKind::O);
  EXPECT_EQ(base_kind(VariantKind::IND), VariantKind::IND);
  EXPECT_TRUE(is_control(VariantKind::OC));
  EXPECT_FALSE(is_control(VariantKind::IND));
  const auto grid = canonical_alpha_grid();
  EXPECT_EQ(grid.size(), 10u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(std::count(grid.begin(), grid.end(), 0.0), 0);
}

TEST(Catalog, JsonRoundTrip) {
  const auto j = Catalog::builtin().to_json();
  const auto back = Catalog::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  auto bad = j;
  bad["catalog_version"] = 99;
  EXPECT_THROW(Catalog::from_json(bad), ValidationError);
}

TEST(Catalog, RejectsInvalidDescriptors) {
  auto d = Catalog::builtin().at(1);
  EXPECT_THROW(Catalog({d, d}), ValidationError);
  auto ratio = d;
  ratio.max_delta = 1.0;
  EXPECT_THROW(Catalog({ratio}), ValidationError);
  auto label = d;
  label.classic_forward_label = 2;
  EXPECT_THROW(Catalog({label}), ValidationError);
}

TEST(Style, SeedZeroIsDefaultAndSeedsAreDeterministic) {
  EXPECT_EQ(style_from_seed(0), StyleParams{});
  EXPECT_EQ(style_from_seed(42), style_from_seed(42));
  std::set<std::string> keys;
  for (std::uint64_t s = 1; s <= 200; ++s) {
    const auto st = style_from_seed(s);
    EXPECT_NO_THROW(validate_style(st));
    keys.insert(style_key(st));
  }
  EXPECT_GT(keys.size(), 150u);
}

TEST(Style, RejectsOutOfRangeParameters) {
  StyleParams s;
  s.jitter_x = Palette::max_jitter + 1;
  EXPECT_THROW(validate_style(s), ValidationError);
  s = {};
  s.accent_index = static_cast<int>(Palette::accents.size());
  EXPECT_THROW(validate_style(s), ValidationError);
  s = {};
  s.background_index = -1;
  EXPECT_THROW(validate_style(s), ValidationError);
}
