#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "viprobe/dataset.hpp"

using namespace viprobe;
namespace fs = std::filesystem;

namespace {

/// One built dataset shared by the read-only tests below.
class BuiltDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixture::TempDir("viprobe-ds");
    manifest_ = new Manifest(build_dataset(fixture::small_config(dir_->path())));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static fixture::TempDir* dir_;
  static Manifest* manifest_;
};

fixture::TempDir* BuiltDataset::dir_ = nullptr;
Manifest* BuiltDataset::manifest_ = nullptr;

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

}  // namespace

TEST_F(BuiltDataset, ItemCountFollowsPlan) {
  // 2 cases x 2 originals x (4 unperturbed kinds + 3 perturbed kinds x 10 alphas)
  EXPECT_EQ(manifest_->items.size(), 136u);
  const auto c = count_items(*manifest_);
  EXPECT_EQ(c.original, 4u);
  EXPECT_EQ(c.perturbed, 40u);
  EXPECT_EQ(c.control, 44u);
  EXPECT_EQ(c.hint, 44u);
  EXPECT_EQ(c.inducer_only, 4u);
}

TEST_F(BuiltDataset, ValidatesCleanAndReloadsIdentically) {
  const auto path = dir_->path() / "manifest.jsonl";
  const auto report = validate_manifest(path);
  EXPECT_TRUE(report.ok()) << (report.violations.empty() ? "" : report.violations.front().message);
  EXPECT_EQ(report.items_checked, 136u);
  const auto back = load_manifest(path);
  EXPECT_EQ(manifest_text(back), util::read_file(path));
  EXPECT_EQ(manifest_hash(back), manifest_hash(*manifest_));
}

TEST_F(BuiltDataset, ItemsAreSortedUniqueAndSelfDescribing) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < manifest_->items.size(); ++i) {
    const auto& it = manifest_->items[i];
    if (i > 0) {
      EXPECT_LT(manifest_->items[i - 1].item_id, it.item_id);
    }
    EXPECT_TRUE(ids.insert(it.item_id).second);
    EXPECT_EQ(it.item_id, make_item_id(it.case_id, it.variant_kind, it.alpha, it.style_seed));
    EXPECT_TRUE(fs::exists(dir_->path() / it.image_path));
    EXPECT_TRUE(fs::exists(dir_->path() / it.scene_path));
    EXPECT_EQ(manifest_->find(it.item_id), &it);
  }
  EXPECT_EQ(manifest_->find("nope"), nullptr);
  EXPECT_TRUE(fs::exists(dir_->path() / "prompts.json"));
}

TEST_F(BuiltDataset, DetectsTamperedImage) {
  fixture::TempDir copy;
  copy_tree(dir_->path(), copy.path());
  const auto& it = manifest_->items.front();
  auto bytes = util::read_file(copy / it.image_path);
  bytes[bytes.size() / 2] ^= 0x01;
  util::write_file_atomic(copy / it.image_path, std::string_view(bytes));
  const auto r = validate_manifest(copy / "manifest.jsonl");
  EXPECT_EQ(r.count("hash_mismatch"), 1u);
}

TEST_F(BuiltDataset, DetectsWrongLabelsAndBrokenAlgebra) {
  auto m = *manifest_;
  m.items[0].ground_truth = GroundTruth::from_forward(1 - m.items[0].ground_truth.y_forward);
  m.items[1].ground_truth.y_reverse = m.items[1].ground_truth.y_forward;
  const auto r = validate_manifest(m);
  EXPECT_GE(r.count("ground_truth"), 2u);
  EXPECT_EQ(r.count("label_algebra"), 1u);
}

TEST_F(BuiltDataset, DetectsInducerLeakIntoControl) {
  fixture::TempDir copy;
  copy_tree(dir_->path(), copy.path());
  auto m = load_manifest(copy / "manifest.jsonl");
  const auto ctrl = std::find_if(m.items.begin(), m.items.end(),
                                 [](const auto& it) { return it.variant_kind == VariantKind::OC; });
  ASSERT_NE(ctrl, m.items.end());
  auto scene = scene_from_json(nlohmann::json::parse(util::read_file(copy / ctrl->scene_path)));
  const auto full = generate_variant(ctrl->case_id, VariantKind::O, 0, ctrl->style_seed).scene;
  for (const auto& e : full.elements)
    if (e.role == Role::inducer) scene.elements.push_back(e);
  util::write_file_atomic(copy / ctrl->scene_path, serialize(scene));
  EXPECT_EQ(validate_manifest(m).count("control_purity"), 1u);
}

TEST_F(BuiltDataset, DetectsMissingItemsAndFiles) {
  auto m = *manifest_;
  const auto perturbed = std::find_if(m.items.begin(), m.items.end(),
                                      [](const auto& it) { return it.variant_kind == VariantKind::PC; });
  m.items.erase(perturbed);
  EXPECT_GE(validate_manifest(m).count("count_arithmetic"), 1u);

  auto moved = *manifest_;
  moved.root = dir_->path() / "elsewhere";
  EXPECT_EQ(validate_manifest(moved).count("io"), 2 * moved.items.size());
  EXPECT_EQ(validate_manifest(dir_->path() / "absent.jsonl").count("io"), 1u);
}

TEST(Dataset, ByteIdenticalAcrossRunsAndWorkerCounts) {
  fixture::TempDir a, b;
  auto ca = fixture::small_config(a.path(), {12});
  auto cb = fixture::small_config(b.path(), {12});
  ca.workers = 1;
  cb.workers = 3;
  build_dataset(ca);
  build_dataset(cb);
  EXPECT_EQ(util::read_file(a / "manifest.jsonl"), util::read_file(b / "manifest.jsonl"));
  for (const auto& entry : fs::directory_iterator(a / "images"))
    EXPECT_EQ(util::read_file(entry.path()), util::read_file(b / "images" / entry.path().filename().string()));
}

TEST(Dataset, DryRunCountsAtFullScale) {
  auto c = DatasetConfig{};
  c.originals_per_case = 32;
  for (int id : {1, 5, 12, 19, 25, 27}) c.originals_overrides[id] = 33;
  c.dry_run = true;
  const auto m = build_dataset(c);
  const auto n = count_items(m);
  EXPECT_EQ(n.original, 870u);
  EXPECT_EQ(n.perturbed, 8700u);
  EXPECT_EQ(n.control, 9570u);
  EXPECT_EQ(n.hint, 9570u);
  EXPECT_EQ(n.inducer_only, 870u);
}

TEST(Dataset, SvgTwinsWhenRequested) {
  fixture::TempDir dir;
  auto c = fixture::small_config(dir.path(), {1});
  c.originals_per_case = 1;
  c.kinds = {VariantKind::O};
  c.emit_svg = true;
  const auto m = build_dataset(c);
  ASSERT_EQ(m.items.size(), 1u);
  EXPECT_NE(util::read_file(dir / m.items[0].vector_path).find("<svg"), std::string::npos);
}

TEST(StyleVariants, DistinctWithDefaultFirst) {
  const auto v = enumerate_style_variants(3, 40, 11);
  ASSERT_EQ(v.size(), 40u);
  EXPECT_EQ(v.front(), style_from_seed(0));
  std::set<std::string> keys;
  for (const auto& s : v) EXPECT_TRUE(keys.insert(style_key(s)).second);
  EXPECT_EQ(enumerate_style_variants(3, 40, 11), v);
  EXPECT_NE(enumerate_style_variants(4, 40, 11), v);
  EXPECT_THROW(enumerate_style_variants(3, 0, 11), ValidationError);
  EXPECT_THROW(enumerate_style_variants(3, static_cast<int>(Palette::space_size()) + 1, 11), ValidationError);
}

TEST(DatasetConfig, ParsesAndRejects) {
  const auto ok = DatasetConfig::from_json(nlohmann::json::parse(
      R"({"cases":[1,2],"originals_per_case":3,"originals_overrides":{"2":5},"kinds":["O","P"],"alpha_grid":[-0.5,0.5]})"));
  EXPECT_EQ(ok.originals_for(1), 3);
  EXPECT_EQ(ok.originals_for(2), 5);
  EXPECT_EQ(plan_dataset(ok).size(), 3u * 3 + 5u * 3);
  EXPECT_TRUE(DatasetConfig::from_json(nlohmann::json::parse(R"({"cases":"all"})")).cases.empty());

  for (const char* bad : {R"({"bogus":1})", R"({"cases":[1,1]})", R"({"cases":[99]})", R"({"alpha_grid":[0]})",
                          R"({"alpha_grid":[1.5]})", R"({"originals_per_case":0})", R"({"kinds":["Q"]})",
                          R"({"originals_overrides":{"x":2}})", R"({"raster_scale":0})", R"([1])"})
    EXPECT_THROW(DatasetConfig::from_json(nlohmann::json::parse(bad)), ValidationError) << bad;
}
