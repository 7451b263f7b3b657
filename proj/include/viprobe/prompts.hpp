#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "viprobe/catalog.hpp"

namespace viprobe {

struct QuestionPair {
  std::string forward;
  std::string reverse;
  int polarity_forward = +1;
};

inline QuestionPair question_pair(int case_id, const Catalog& catalog = Catalog::builtin()) {
  const auto& d = catalog.at(case_id);
  return {d.forward_question, d.reverse_question, +1};
}

enum class PromptVariant { forward, reverse, instructional, instructional_reverse };

inline const char* to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::forward: return "forward";
    case PromptVariant::reverse: return "reverse";
    case PromptVariant::instructional: return "instructional";
    case PromptVariant::instructional_reverse: return "instructional_reverse";
  }
  return "?";
}

inline PromptVariant prompt_variant_from_string(const std::string& s) {
  for (auto v : {PromptVariant::forward, PromptVariant::reverse, PromptVariant::instructional,
                 PromptVariant::instructional_reverse})
    if (s == to_string(v)) return v;
  throw ValidationError("unknown prompt variant: " + s);
}

/// +1 asks the catalog predicate, -1 its complement.
inline int polarity(PromptVariant v) {
  return (v == PromptVariant::reverse || v == PromptVariant::instructional_reverse) ? -1 : +1;
}
inline bool is_instructional(PromptVariant v) {
  return v == PromptVariant::instructional || v == PromptVariant::instructional_reverse;
}

inline constexpr const char* kAnswerInstructions =
    "Answer Instructions:\n"
    "1. Write your reasoning inside <reasons>...</reasons>.\n"
    "  - Use natural language explanation.\n"
    "2. Give the final numeric answer inside <answer>...</answer>.\n"
    "  - Use \"1\" if yes.\n"
    "  - Use \"0\" if no.\n"
    "  - Do not write anything else inside <answer>.";

// Quote characters reproduced as published (straight open, curly close).
inline constexpr const char* kVisualComparisonInstructions =
    "Visual Comparison Instructions:\n"
    "Base your judgment exclusively on direct visual perception of the image. Compare the two targets "
    "systematically using only what is visible in the image itself.\n"
    "Critical constraints:\n"
    "\t•\tDisregard language priors and linguistic biases\n"
    "\t•\tIgnore implications from question phrasing\n"
    "\t•\tSet aside world knowledge and assumptions\n"
    "\t•\tDo not rely on typical patterns or expectations\n"
    "Required approach:\n"
    "\t1.\tEvaluate the \"equal” hypothesis against visual evidence\n"
    "\t2.\tEvaluate the \"not equal” hypothesis against visual evidence\n"
    "\t3.\tCompare which hypothesis better matches the observable data\n"
    "\t4.\tProvide a binary answer based solely on this visual analysis\n"
    "Your response must be grounded entirely in what you can directly perceive in the image.";

struct PromptText {
  std::optional<std::string> system;
  std::string user;
  friend bool operator==(const PromptText&, const PromptText&) = default;
};

inline PromptText render_prompt(const std::string& question, bool instructional) {
  if (question.empty()) throw ValidationError("empty question");
  PromptText p;
  p.user = question + "\n" + kAnswerInstructions;
  if (instructional) p.system = kVisualComparisonInstructions;
  return p;
}

inline PromptText render_prompt(int case_id, PromptVariant v, const Catalog& catalog = Catalog::builtin()) {
  const auto q = question_pair(case_id, catalog);
  return render_prompt(polarity(v) > 0 ? q.forward : q.reverse, is_instructional(v));
}

/// Label a truthful respondent gives for this variant.
inline int expected_answer(const GroundTruth& t, PromptVariant v) {
  switch (v) {
    case PromptVariant::forward: return t.y_forward;
    case PromptVariant::reverse: return t.y_reverse;
    case PromptVariant::instructional: return t.y_instructional;
    case PromptVariant::instructional_reverse: return 1 - t.y_instructional;
  }
  return t.y_forward;
}

/// Everything needed to audit the exact texts sent: per-case question pairs
/// plus the two fixed blocks.
inline nlohmann::json prompts_document(const std::vector<int>& case_ids, const Catalog& catalog = Catalog::builtin()) {
  nlohmann::json cases = nlohmann::json::array();
  for (int id : case_ids) {
    const auto q = question_pair(id, catalog);
    cases.push_back({{"case_id", id},
                     {"forward", q.forward},
                     {"reverse", q.reverse},
                     {"forward_prompt", render_prompt(q.forward, false).user},
                     {"reverse_prompt", render_prompt(q.reverse, false).user}});
  }
  return {{"answer_instructions", kAnswerInstructions},
          {"visual_comparison_instructions", kVisualComparisonInstructions},
          {"cases", cases}};
}

}  // namespace viprobe
