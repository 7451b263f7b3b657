#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "viprobe/pipeline.hpp"

using namespace viprobe;
namespace fs = std::filesystem;

namespace {

nlohmann::json mini_config(const fs::path& out) {
  return {{"output_dir", out.string()},
          {"dataset", {{"cases", {1, 12}}, {"originals_per_case", 2}, {"master_seed", 7}}},
          {"models",
           {{{"provider", "mock"}, {"model", "mock-template"}, {"mock", {{"behavior", "template"}}}},
            {{"provider", "mock"}, {"model", "mock-oracle"}, {"mock", {{"behavior", "oracle"}}}}}},
          {"prompts", {{"variants", {"forward", "reverse", "instructional", "instructional_reverse"}}}}};
}

/// One generated, probed and scored mini experiment shared by the tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixture::TempDir("viprobe-report");
    config_ = new ExperimentConfig(ExperimentConfig::from_json(mini_config(dir_->path())));
    std::ostringstream log;
    cmd_gen(*config_, log);
    cmd_probe(*config_, log);
    cmd_score(*config_, log);
    cmd_report(*config_, log);
  }
  static void TearDownTestSuite() {
    delete config_;
    delete dir_;
  }
  static std::vector<std::string> table_lines() {
    std::istringstream in(util::read_file(config_->report_dir() / "table.csv"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
  }
  static fixture::TempDir* dir_;
  static ExperimentConfig* config_;
};

fixture::TempDir* Pipeline::dir_ = nullptr;
ExperimentConfig* Pipeline::config_ = nullptr;

}  // namespace

TEST_F(Pipeline, TableRowsMatchMockBehaviours) {
  const auto lines = table_lines();
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], kTableHeader);
  // Template: classic label everywhere except controls, so O is right, P wrong.
  EXPECT_EQ(lines[1], "mock-template,100.00,100.00,0.00,50.00,100.00,100.00,100.00,0.00,-100.00,50.00,100000.00");
  EXPECT_EQ(lines[2], "mock-oracle,100.00,100.00,100.00,100.00,100.00,100.00,100.00,0.00,0.00,0.00,0.00");
}

TEST_F(Pipeline, ScoreFilesCarryEveryMetric) {
  const auto j = nlohmann::json::parse(util::read_file(config_->score_path("mock-template")));
  EXPECT_EQ(j.at("model"), "mock-template");
  EXPECT_EQ(j.at("overall").at("PFC"), 1.0);
  // Pooled over every kind: only the 80 P and PH pairs are coherent but wrong.
  EXPECT_DOUBLE_EQ(j.at("overall").at("CbW").get<double>(), 80.0 / 136.0);
  EXPECT_EQ(j.at("overall").at("n").at("P"), 40);
  EXPECT_TRUE(j.at("warnings").empty());
  EXPECT_EQ(j.at("per_category").size(), 2u);
  EXPECT_EQ(j.at("dose_response").size(), 2u);
  EXPECT_EQ(j.at("dose_response")[0].at("points").size(), 10u);
}

TEST_F(Pipeline, InterventionRowsCoverHintsAndSystemPrompt) {
  const auto csv = util::read_file(config_->report_dir() / "interventions.csv");
  EXPECT_NE(csv.find("mock-template,hint,O,100.00,100.00,0.00"), std::string::npos);
  EXPECT_NE(csv.find("mock-template,hint,P,0.00,0.00,0.00"), std::string::npos);
  EXPECT_NE(csv.find("mock-oracle,system_prompt,P,100.00,100.00,0.00"), std::string::npos);
}

TEST_F(Pipeline, ReportIsByteStable) {
  std::map<std::string, std::string> before;
  for (const auto& e : fs::directory_iterator(config_->report_dir()))
    before[e.path().filename().string()] = util::read_file(e.path());
  EXPECT_EQ(before.size(), 9u);
  std::ostringstream log;
  cmd_report(*config_, log);
  for (const auto& [name, bytes] : before)
    EXPECT_EQ(util::read_file(config_->report_dir() / name), bytes) << name;
}

TEST_F(Pipeline, PlotsAreValidImagesWithLabels) {
  const auto svg = util::read_file(config_->report_dir() / "dose_response.svg");
  EXPECT_NE(svg.find("<text"), std::string::npos);
  EXPECT_NE(svg.find("mock-oracle PC"), std::string::npos);
  const auto png = util::read_file(config_->report_dir() / "pfc_decomposition.png");
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
}

TEST_F(Pipeline, ProbeResumesWithoutResending) {
  std::ostringstream log;
  cmd_probe(*config_, log);
  EXPECT_NE(log.str().find("cached 544, sent 0"), std::string::npos) << log.str();
}

TEST_F(Pipeline, UnpairedRowsBecomeWarnings) {
  auto rows = load_response_log(config_->log_path("mock-oracle"));
  const auto victim = rows.front().item_id;
  std::erase_if(rows, [&](const RawResponse& r) {
    return r.item_id == victim && r.prompt_variant == PromptVariant::reverse;
  });
  const auto report = build_report(rows, require_manifest(*config_), "mock-oracle");
  EXPECT_EQ(report.missing_pairs, 1u);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_EQ(report.warnings[0], "unpaired item " + victim);
}

TEST(ExperimentConfig, DefaultsAndPaths) {
  const auto c = ExperimentConfig::from_json(mini_config("/tmp/x"));
  EXPECT_EQ(c.dataset_dir(), fs::path("/tmp/x/dataset"));
  EXPECT_EQ(c.log_path("org/model:v1"), fs::path("/tmp/x/responses/org_model_v1.jsonl"));
  EXPECT_EQ(c.journal_path(), fs::path("/tmp/x/study/journal.jsonl"));
  EXPECT_EQ(ExperimentConfig::from_json(mini_config("/tmp/x"), fs::path("/tmp/y")).report_dir(), fs::path("/tmp/y/report"));
}

TEST(ExperimentConfig, RejectsBadFiles) {
  auto with = [](auto edit) {
    auto j = mini_config("/tmp/x");
    edit(j);
    return j;
  };
  const std::vector<nlohmann::json> bad = {
      with([](auto& j) { j["extra"] = 1; }),
      with([](auto& j) { j["models"][0]["provider"] = "carrier-pigeon"; }),
      with([](auto& j) { j["models"][0]["provider"] = "http"; }),
      with([](auto& j) { j["models"][1]["model"] = "mock-template"; }),
      with([](auto& j) { j["models"][0]["mock"]["behavior"] = "psychic"; }),
      with([](auto& j) { j["models"][0]["surprise"] = true; }),
      with([](auto& j) { j["prompts"]["variants"] = nlohmann::json::array(); }),
      with([](auto& j) { j["metrics"] = {{"epsilon", 0}}; }),
      with([](auto& j) { j["study"] = {{"port", 70000}}; }),
      with([](auto& j) { j["dataset"]["cases"] = {42}; }),
      nlohmann::json::array(),
  };
  for (const auto& j : bad) EXPECT_THROW(ExperimentConfig::from_json(j), ValidationError) << j.dump();

  fixture::TempDir dir;
  EXPECT_THROW(ExperimentConfig::load(dir / "missing.json"), ValidationError);
  util::write_file_atomic(dir / "broken.json", std::string_view("{"));
  EXPECT_THROW(ExperimentConfig::load(dir / "broken.json"), ValidationError);
}

TEST(Commands, FailCleanlyWithoutPriorSteps) {
  fixture::TempDir dir;
  const auto c = ExperimentConfig::from_json(mini_config(dir.path()));
  std::ostringstream log;
  EXPECT_THROW(cmd_probe(c, log), ValidationError);
  EXPECT_THROW(cmd_score(c, log), ValidationError);
  EXPECT_THROW(cmd_report(c, log), ValidationError);
}
