#pragma once

// Six-statement dialogue quality questionnaire (English and Italian) with a
// six-option agreement scale and no neutral midpoint.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/model.hpp"

namespace dialab {

inline constexpr std::size_t kQuestionnaireSize = 6;

using StatementTable = std::array<std::string_view, kQuestionnaireSize>;
using OptionTable = std::array<std::string_view, kQuestionnaireSize>;

// "en", "en-US", "it", "it-IT" -> "en" / "it". Throws UnsupportedLanguage.
std::string questionnaire_language(std::string_view tag);

const StatementTable& questionnaire_statements(std::string_view language);
// Ascending agreement: strongly disagree ... strongly agree.
const OptionTable& likert_options(std::string_view language);

struct QuestionnaireRow {
  std::string dialogue_id;
  int statement_index = 0;  // 1..6
  std::string statement_text;
  std::array<std::string, kQuestionnaireSize> options;
  bool comment_allowed = true;
};

struct Questionnaire {
  std::string dialogue_id;
  std::string language;
  std::string transcript;
  std::vector<QuestionnaireRow> rows;
};

Questionnaire export_questionnaire(const Dialogue& d, std::string_view language);

// Header: dialogue_id,statement_index,statement_text,option_1..option_6,comment_allowed
std::string questionnaire_to_csv(const Questionnaire& q);
nlohmann::json questionnaire_to_json(const Questionnaire& q);

}  // namespace dialab
