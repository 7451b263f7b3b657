#include <gtest/gtest.h>

#include <set>

#include "viprobe/raster.hpp"
#include "viprobe/variants.hpp"

using namespace viprobe;

namespace {

std::set<Role> roles(const Scene& s) {
  std::set<Role> r;
  for (const auto& e : s.elements) r.insert(e.role);
  return r;
}

std::vector<std::string> ids_with(const Scene& s, Role role) {
  std::vector<std::string> out;
  for (const auto& e : s.elements)
    if (e.role == role) out.push_back(e.id);
  return out;
}

class EveryCase : public ::testing::TestWithParam<int> {};

}  // namespace

TEST_P(EveryCase, MeasuredSettingTracksAlpha) {
  const int id = GetParam();
  const auto& cat = Catalog::builtin();
  for (double a : {-1.0, -0.6, -0.2, 0.2, 0.6, 1.0}) {
    const auto v = generate_variant(id, VariantKind::P, a, 0);
    EXPECT_NEAR(measured_setting(id, v.scene), cat.map_alpha(id, a).value, 1e-6) << "alpha " << a;
  }
  const auto o = generate_variant(id, VariantKind::O, 0, 0);
  EXPECT_NEAR(measured_setting(id, o.scene), neutral_value(cat.at(id).controlling_factor), 1e-6);
}

TEST_P(EveryCase, StyleDoesNotTouchTheControlledFactor) {
  const int id = GetParam();
  const double base = measured_setting(id, generate_variant(id, VariantKind::P, 0.4, 0).scene);
  for (std::uint64_t seed : {1u, 5u, 99u, 12345u})
    EXPECT_NEAR(measured_setting(id, generate_variant(id, VariantKind::P, 0.4, seed).scene), base, 1e-6) << seed;
}

TEST_P(EveryCase, KindsKeepTheRightRoles) {
  const int id = GetParam();
  const auto o = generate_variant(id, VariantKind::O, 0, 3).scene;
  const auto oc = generate_variant(id, VariantKind::OC, 0, 3).scene;
  const auto oh = generate_variant(id, VariantKind::OH, 0, 3).scene;
  const auto ind = generate_variant(id, VariantKind::IND, 0, 3).scene;

  EXPECT_TRUE(roles(o).count(Role::target));
  EXPECT_TRUE(roles(o).count(Role::inducer));
  EXPECT_FALSE(roles(o).count(Role::hint));

  EXPECT_FALSE(roles(oc).count(Role::inducer));
  EXPECT_FALSE(roles(oc).count(Role::hint));
  EXPECT_EQ(ids_with(oc, Role::target), ids_with(o, Role::target));

  EXPECT_FALSE(ids_with(oh, Role::hint).empty());
  EXPECT_EQ(ids_with(oh, Role::target), ids_with(o, Role::target));
  EXPECT_EQ(ids_with(oh, Role::inducer), ids_with(o, Role::inducer));

  EXPECT_EQ(roles(ind), std::set<Role>{Role::inducer});
  EXPECT_EQ(inducer_ids(id, ind), ids_with(o, Role::inducer));
}

TEST_P(EveryCase, TargetSpecNamesRealTargets) {
  const int id = GetParam();
  const auto spec = target_spec(id);
  const auto s = generate_variant(id, VariantKind::O, 0, 0).scene;
  EXPECT_EQ(spec.all, ids_with(s, Role::target));
  ASSERT_NE(s.find(spec.changed), nullptr);
  if (!spec.reference.empty()) {
    EXPECT_NE(s.find(spec.reference), nullptr);
  }
}

TEST_P(EveryCase, ProvenanceAndTruth) {
  const int id = GetParam();
  const auto v = generate_variant(id, VariantKind::PH, -0.4, 11);
  ASSERT_TRUE(v.scene.provenance);
  EXPECT_EQ(*v.scene.provenance, (Provenance{id, "PH", -0.4, 11, kGeneratorVersion}));
  EXPECT_EQ(v.truth, Catalog::builtin().ground_truth(id, VariantKind::PH, -0.4));
}

TEST_P(EveryCase, DeterministicPerSeed) {
  const int id = GetParam();
  const auto a = generate_variant(id, VariantKind::P, 0.8, 21).scene;
  const auto b = generate_variant(id, VariantKind::P, 0.8, 21).scene;
  EXPECT_EQ(serialize(a), serialize(b));
  EXPECT_EQ(encode_png(rasterize(a)), encode_png(rasterize(b)));
}

INSTANTIATE_TEST_SUITE_P(Cases, EveryCase, ::testing::Range(1, 28));

TEST(Variants, RejectsBadInputs) {
  EXPECT_THROW(generate_variant(1, VariantKind::P, 0, 0), ValidationError);
  EXPECT_THROW(generate_variant(1, VariantKind::O, 0.4, 0), ValidationError);
  EXPECT_THROW(generate_variant(0, VariantKind::O, 0, 0), ValidationError);
  StyleParams bad;
  bad.jitter_y = 1000;
  EXPECT_THROW(generate_variant(1, VariantKind::O, 0, bad), ValidationError);
  EXPECT_THROW(inducer_ids(2, generate_variant(1, VariantKind::O, 0, 0).scene), ValidationError);
}

TEST(Variants, SignOfAlphaFollowsClassicPercept) {
  // Case 1: alpha > 0 lengthens the changed line.
  const auto spec = target_spec(1);
  const auto plus = generate_variant(1, VariantKind::P, 0.4, 0).scene;
  EXPECT_GT(measure(plus, spec.changed, spec.measure).value, measure(plus, spec.reference, spec.measure).value);
  const auto minus = generate_variant(1, VariantKind::P, -0.4, 0).scene;
  EXPECT_LT(measure(minus, spec.changed, spec.measure).value, measure(minus, spec.reference, spec.measure).value);
}

TEST(Variants, StyleChangesOnlyPresentation) {
  const auto a = generate_variant(5, VariantKind::O, 0, 0).scene;
  const auto b = generate_variant(5, VariantKind::O, 0, 12345).scene;
  EXPECT_NE(serialize(a), serialize(b));
  EXPECT_EQ(a.elements.size(), b.elements.size());
}
