#include <gtest/gtest.h>

#include "viprobe/prompts.hpp"

using namespace viprobe;

TEST(Prompts, ForwardAndReverseUseCatalogQuestions) {
  const auto& d = Catalog::builtin().at(5);
  const auto q = question_pair(5);
  EXPECT_EQ(q.forward, d.forward_question);
  EXPECT_EQ(q.reverse, d.reverse_question);
  EXPECT_EQ(render_prompt(5, PromptVariant::forward).user, d.forward_question + "\n" + kAnswerInstructions);
  EXPECT_EQ(render_prompt(5, PromptVariant::reverse).user, d.reverse_question + "\n" + kAnswerInstructions);
  EXPECT_FALSE(render_prompt(5, PromptVariant::forward).system);
}

TEST(Prompts, InstructionalAddsSystemBlockOnly) {
  const auto plain = render_prompt(12, PromptVariant::forward);
  const auto instr = render_prompt(12, PromptVariant::instructional);
  EXPECT_EQ(instr.user, plain.user);
  ASSERT_TRUE(instr.system);
  EXPECT_EQ(*instr.system, kVisualComparisonInstructions);
  EXPECT_EQ(render_prompt(12, PromptVariant::instructional_reverse).user, render_prompt(12, PromptVariant::reverse).user);
}

TEST(Prompts, AnswerBlockIsVerbatim) {
  const std::string block = kAnswerInstructions;
  EXPECT_EQ(block.rfind("Answer Instructions:\n", 0), 0u);
  EXPECT_NE(block.find("<reasons>...</reasons>"), std::string::npos);
  EXPECT_NE(block.find("<answer>...</answer>"), std::string::npos);
  EXPECT_NE(block.find("Use \"1\" if yes."), std::string::npos);
  EXPECT_NE(block.find("Use \"0\" if no."), std::string::npos);
  const std::string vis = kVisualComparisonInstructions;
  EXPECT_NE(vis.find("\"equal\xE2\x80\x9D hypothesis"), std::string::npos);
  EXPECT_NE(vis.find("\t\xE2\x80\xA2\tDisregard language priors"), std::string::npos);
}

TEST(Prompts, PolarityAndExpectedAnswers) {
  EXPECT_EQ(polarity(PromptVariant::forward), 1);
  EXPECT_EQ(polarity(PromptVariant::reverse), -1);
  EXPECT_EQ(polarity(PromptVariant::instructional_reverse), -1);
  const auto t = GroundTruth::from_forward(1);
  EXPECT_EQ(expected_answer(t, PromptVariant::forward), 1);
  EXPECT_EQ(expected_answer(t, PromptVariant::reverse), 0);
  EXPECT_EQ(expected_answer(t, PromptVariant::instructional), 1);
  EXPECT_EQ(expected_answer(t, PromptVariant::instructional_reverse), 0);
}

TEST(Prompts, VariantNamesRoundTrip) {
  for (auto v : {PromptVariant::forward, PromptVariant::reverse, PromptVariant::instructional,
                 PromptVariant::instructional_reverse})
    EXPECT_EQ(prompt_variant_from_string(to_string(v)), v);
  EXPECT_THROW(prompt_variant_from_string("sideways"), ValidationError);
}

TEST(Prompts, RejectsEmptyQuestionAndUnknownCase) {
  EXPECT_THROW(render_prompt(std::string(), false), ValidationError);
  EXPECT_THROW(render_prompt(0, PromptVariant::forward), ValidationError);
}

TEST(Prompts, DocumentListsEveryRequestedCase) {
  const auto doc = prompts_document({1, 27});
  ASSERT_EQ(doc.at("cases").size(), 2u);
  EXPECT_EQ(doc["cases"][1]["case_id"], 27);
  EXPECT_EQ(doc["cases"][0]["forward_prompt"], render_prompt(1, PromptVariant::forward).user);
  EXPECT_EQ(doc["answer_instructions"], kAnswerInstructions);
}
