#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "viprobe/metrics.hpp"

using namespace viprobe;

namespace {

ResponsePair pair_of(int fwd, int rev, int truth_fwd, VariantKind kind = VariantKind::O, double alpha = 0) {
  auto v = [](int a) { return a == 1 ? AnswerValue::yes : a == 0 ? AnswerValue::no : AnswerValue::invalid; };
  ResponsePair p;
  p.item_id = "x";
  p.a_forward = v(fwd);
  p.a_reverse = v(rev);
  p.ground_truth = GroundTruth::from_forward(truth_fwd);
  p.kind = kind;
  p.alpha = alpha;
  return p;
}

// Independent restatement of the paired-prompt definitions, counting cases
// by enumeration rather than through the library predicates.
struct Counts {
  int complementary = 0, correct = 0, same = 0, invalid = 0;
};
Counts brute_force(const std::vector<std::array<int, 3>>& rows) {
  Counts c;
  for (auto [f, r, y] : rows) {
    if (f < 0 || r < 0) {
      ++c.invalid;
      continue;
    }
    if (f + r == 1) ++c.complementary;
    if (f == y && r == 1 - y) ++c.correct;
    if (f == r) ++c.same;
  }
  return c;
}

RawResponse row(const std::string& id, PromptVariant v, const std::string& text, std::int64_t ts = 1,
                const std::string& status = "ok") {
  RawResponse r;
  r.item_id = id;
  r.prompt_variant = v;
  r.polarity = polarity(v);
  r.model = "m";
  r.raw_text = text;
  r.timestamp_ms = ts;
  r.status = status;
  return r;
}

Manifest tiny_manifest() {
  Manifest m;
  for (const char* id : {"a", "b", "c"}) {
    ManifestItem it;
    it.item_id = id;
    it.case_id = 1;
    it.ground_truth = GroundTruth::from_forward(1);
    m.items.push_back(it);
  }
  return m;
}

}  // namespace

TEST(PairedMetrics, MatchBruteForceOnRandomSets) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<std::array<int, 3>> rows;
    std::vector<ResponsePair> pairs;
    for (int i = 0; i < n; ++i) {
      const int f = static_cast<int>(rng() % 3) - 1, r = static_cast<int>(rng() % 3) - 1, y = static_cast<int>(rng() % 2);
      rows.push_back({f, r, y});
      pairs.push_back(pair_of(f, r, y));
    }
    const auto c = brute_force(rows);
    EXPECT_DOUBLE_EQ(pfc(pairs), static_cast<double>(c.complementary) / n);
    EXPECT_DOUBLE_EQ(pfa(pairs), static_cast<double>(c.correct) / n);
    EXPECT_DOUBLE_EQ(tfi(pairs), static_cast<double>(c.same) / n);
    EXPECT_DOUBLE_EQ(invalid_rate(pairs), static_cast<double>(c.invalid) / n);
    EXPECT_NEAR(pfc(pairs), pfa(pairs) + cbw(pfc(pairs), pfa(pairs)), 1e-15);
    EXPECT_NEAR(pfc(pairs) + tfi(pairs) + invalid_rate(pairs), 1.0, 1e-12);
  }
}

TEST(PairedMetrics, EmptyInputThrows) {
  EXPECT_THROW(pfc({}), ValidationError);
  EXPECT_THROW(pfa({}), ValidationError);
  EXPECT_THROW(tfi({}), ValidationError);
  EXPECT_THROW(invalid_rate({}), ValidationError);
}

TEST(PairedMetrics, CoherentButWrong) {
  EXPECT_NEAR(cbw(92.32, 61.24), 31.08, 1e-9);
  EXPECT_THROW(cbw(0.4, 0.5), ValidationError);
  EXPECT_THROW(cbw(-1, 0), ValidationError);
  // Complementary but both wrong.
  const std::vector<ResponsePair> p{pair_of(0, 1, 1), pair_of(1, 0, 1)};
  EXPECT_DOUBLE_EQ(cbw(pfc(p), pfa(p)), 0.5);
}

TEST(Multiplier, PublishedRowsReproduce) {
  EXPECT_NEAR(illusion_multiplier(91.72, 4.45, 96.55, 52.24), 1.97, 0.01);
  EXPECT_NEAR(illusion_multiplier(87.24, 8.97, 93.45, 30.38), 1.24, 0.01);
  EXPECT_NEAR(illusion_multiplier(22.41, 14.07, 74.48, 10.72), 0.13, 0.01);
}

TEST(Multiplier, EpsilonGuardsZeroControlGap) {
  EXPECT_DOUBLE_EQ(illusion_multiplier(100, 0, 50, 50), 100 / 0.001);
  EXPECT_DOUBLE_EQ(illusion_multiplier(0.6, 0.2, 0.5, 0.5, {0.01}, AccuracyScale::fraction), 0.4 / 0.01);
  EXPECT_THROW(illusion_multiplier(101, 0, 0, 0), ValidationError);
  EXPECT_THROW(illusion_multiplier(1.5, 0, 0, 0, {}, AccuracyScale::fraction), ValidationError);
  EXPECT_THROW(illusion_multiplier(1, 0, 0, 0, {0}), ValidationError);
}

TEST(Pairing, HandlesMissingDuplicatesUnknownAndFailures) {
  const auto m = tiny_manifest();
  const std::vector<RawResponse> log{
      row("a", PromptVariant::forward, "<answer>1</answer>"),
      row("a", PromptVariant::reverse, "<answer>1</answer>", 1),
      row("a", PromptVariant::reverse, "<answer>0</answer>", 5),  // later row wins
      row("b", PromptVariant::forward, "<answer>1</answer>"),   // no reverse
      row("c", PromptVariant::forward, "", 1, "failed"),
      row("c", PromptVariant::reverse, "<answer>0</answer>"),
      row("zzz", PromptVariant::forward, "<answer>1</answer>"),
      row("a", PromptVariant::instructional, "<answer>0</answer>"),
  };
  const auto r = pair_responses(log, m);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.missing, std::vector<std::string>{"b"});
  EXPECT_EQ(r.duplicates, std::vector<std::string>{"a/reverse"});
  EXPECT_EQ(r.unknown, std::vector<std::string>{"zzz"});
  EXPECT_EQ(r.pairs[0].item_id, "a");
  EXPECT_EQ(r.pairs[0].a_reverse, AnswerValue::no);
  EXPECT_EQ(r.pairs[1].a_forward, AnswerValue::invalid);
  EXPECT_DOUBLE_EQ(pfa(r.pairs), 0.5);

  const auto instr = pair_responses(log, m, true);
  EXPECT_TRUE(instr.pairs.empty());
  EXPECT_EQ(instr.missing, std::vector<std::string>{"a"});
  EXPECT_TRUE(pair_responses(log, m, false, "other-model").pairs.empty());
}

TEST(Dose, AccuracyPerSignedAlpha) {
  std::vector<ResponsePair> pairs;
  for (double a : {-0.4, -0.4, 0.4, 0.8}) pairs.push_back(pair_of(1, 0, a > 0 ? 1 : 0, VariantKind::P, a));
  const auto c = dose_response(pairs, VariantKind::P, {0.8, -0.4, 0.4, 1.0});
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0].alpha, -0.4);
  EXPECT_EQ(c.points[0].n, 2u);
  EXPECT_DOUBLE_EQ(c.points[0].accuracy, 0.0);
  EXPECT_DOUBLE_EQ(c.points[1].accuracy, 1.0);
  EXPECT_EQ(c.missing, std::vector<double>{1.0});
  EXPECT_THROW(dose_response(pairs, VariantKind::O), ValidationError);
}

TEST(Threshold, FixtureInterpolatesBetweenMagnitudes) {
  const auto j = nlohmann::json::parse(util::read_file(fixture::data_dir() / "threshold_fixture.json"));
  std::map<double, double> rates;
  for (const auto& [k, v] : j.items()) rates[std::stod(k)] = v.get<double>();
  const auto t = human_threshold(rates);
  ASSERT_TRUE(t);
  // Linear between (0.6, 0.90) and (0.8, 0.96).
  EXPECT_NEAR(*t, 0.6 + 0.2 * (0.95 - 0.90) / (0.96 - 0.90), 1e-12);
  EXPECT_NEAR(*t, 0.767, 0.001);
}

TEST(Threshold, AbsentWhenNeverReached) {
  EXPECT_FALSE(human_threshold({{0.2, 0.1}, {0.4, 0.5}, {0.6, 0.8}, {1.0, 0.94}}));
}

TEST(Threshold, FoldsSignsAndSmoothsNonMonotoneRates) {
  // |0.4| folds to 0.9; the dip at 0.6 pools with 0.4.
  const auto t = human_threshold({{-0.4, 0.85}, {0.4, 0.95}, {0.6, 0.8}, {0.2, 0.3}, {1.0, 1.0}});
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 0.6 + 0.4 * (0.95 - 0.85) / (1.0 - 0.85), 1e-12);
  EXPECT_DOUBLE_EQ(*human_threshold({{0.2, 0.97}, {0.4, 0.99}, {0.6, 1.0}}), 0.2);
  EXPECT_THROW(human_threshold({{0.2, 0.5}, {0.4, 0.6}}), ValidationError);
  EXPECT_THROW(human_threshold({{0.2, 1.5}, {0.4, 0.6}, {0.6, 0.7}}), ValidationError);
}

TEST(Summary, TableColumnsFollowDefinitions) {
  std::vector<ResponsePair> pairs;
  // O: 3/4 correct, P: 1/4, OC: 4/4, PC: 2/4.
  auto add = [&](VariantKind k, int correct) {
    for (int i = 0; i < 4; ++i) pairs.push_back(i < correct ? pair_of(1, 0, 1, k) : pair_of(0, 1, 1, k));
  };
  add(VariantKind::O, 3);
  add(VariantKind::P, 1);
  add(VariantKind::OC, 4);
  add(VariantKind::PC, 2);
  const auto s = summarize(pairs);
  EXPECT_DOUBLE_EQ(*s.ave_illusion(), 0.5);
  EXPECT_DOUBLE_EQ(*s.ave_control(), 0.75);
  EXPECT_DOUBLE_EQ(*s.delta_o(), -0.25);
  EXPECT_DOUBLE_EQ(*s.delta_p(), -0.25);
  EXPECT_DOUBLE_EQ(*s.delta_ave(), 0.25);
  EXPECT_NEAR(*s.multiplier(), 50 / (50 + 0.001), 1e-12);
  EXPECT_DOUBLE_EQ(*s.pfc, 1.0);
  EXPECT_FALSE(s.at(VariantKind::PH));

  MetricReport r;
  r.model = "demo,model";
  r.overall = s;
  EXPECT_EQ(table_csv({r}), std::string(kTableHeader) + "\n\"demo,model\",100.00,75.00,25.00,50.00,100.00,50.00,75.00,"
                                                        "-25.00,-25.00,25.00,1.00\n");
}

TEST(Summary, MissingSlicesLeaveBlankColumns) {
  MetricReport r;
  r.model = "m";
  r.overall = summarize({pair_of(1, 0, 1, VariantKind::O)});
  EXPECT_EQ(table_csv({r}), std::string(kTableHeader) + "\nm,100.00,100.00,,,,,,,,,\n");
}
