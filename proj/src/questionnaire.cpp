#include "dialab/questionnaire.hpp"

#include "dialab/error.hpp"
#include "dialab/transcript_parser.hpp"

namespace dialab {

namespace {

constexpr StatementTable kStatementsEn = {
    "Requests and responses are consistent across the dialogue.",
    "The information that is exchanged by participants in the dialogue is realistic.",
    "The level of formality shown by the two participants is consistent throughout the dialogue.",
    "Participants are respectful towards each other (no offensive/discriminatory language is used).",
    "The participants' sentences sound spontaneous and natural in the dialogue.",
    "The dialogue comes to a conclusion.",
};

constexpr StatementTable kStatementsIt = {
    "Le richieste e le risposte nel dialogo sono coerenti.",
    "Le informazioni che i partecipanti si scambiano nel dialogo sono realistiche.",
    "Il livello di formalità dei due partecipanti è mantenuto costante per tutto il dialogo.",
    "I partecipanti sono rispettosi l’uno verso l’altro (non usano linguaggio offensivo o discriminatorio).",
    "Le frasi dei partecipanti sono spontanee e naturali nel contesto del dialogo.",
    "Il dialogo arriva ad una conclusione.",
};

constexpr OptionTable kOptionsEn = {
    "Strongly disagree", "Disagree", "Somewhat disagree", "Somewhat agree", "Agree", "Strongly Agree",
};

constexpr OptionTable kOptionsIt = {
    "Fortemente in disaccordo", "In disaccordo",  "Leggermente in disaccordo",
    "Leggermente d'accordo",    "D'accordo",      "Fortemente d'accordo",
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string questionnaire_language(std::string_view tag) {
  std::string primary = normalize_token(tag.substr(0, tag.find_first_of("-_")));
  if (primary == "en" || primary == "it") return primary;
  throw Error(ErrorCode::unsupported_language, "questionnaire not available in '" + std::string(tag) + "'");
}

const StatementTable& questionnaire_statements(std::string_view language) {
  return questionnaire_language(language) == "it" ? kStatementsIt : kStatementsEn;
}

const OptionTable& likert_options(std::string_view language) {
  return questionnaire_language(language) == "it" ? kOptionsIt : kOptionsEn;
}

Questionnaire export_questionnaire(const Dialogue& d, std::string_view language) {
  Questionnaire q;
  q.language = questionnaire_language(language);
  q.dialogue_id = d.id;
  q.transcript = serialize_dialogue(d);
  const auto& statements = questionnaire_statements(q.language);
  const auto& options = likert_options(q.language);
  for (std::size_t i = 0; i < kQuestionnaireSize; ++i) {
    QuestionnaireRow row;
    row.dialogue_id = d.id;
    row.statement_index = static_cast<int>(i) + 1;
    row.statement_text = std::string(statements[i]);
    for (std::size_t k = 0; k < kQuestionnaireSize; ++k) row.options[k] = std::string(options[k]);
    q.rows.push_back(std::move(row));
  }
  return q;
}

std::string questionnaire_to_csv(const Questionnaire& q) {
  std::string out = "dialogue_id,statement_index,statement_text";
  for (std::size_t k = 1; k <= kQuestionnaireSize; ++k) out += ",option_" + std::to_string(k);
  out += ",comment_allowed\n";
  for (const auto& row : q.rows) {
    out += csv_field(row.dialogue_id) + "," + std::to_string(row.statement_index) + "," +
           csv_field(row.statement_text);
    for (const auto& opt : row.options) out += "," + csv_field(opt);
    out += row.comment_allowed ? ",true\n" : ",false\n";
  }
  return out;
}

nlohmann::json questionnaire_to_json(const Questionnaire& q) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : q.rows) {
    rows.push_back({{"dialogue_id", row.dialogue_id},
                    {"statement_index", row.statement_index},
                    {"statement_text", row.statement_text},
                    {"options", row.options},
                    {"comment_allowed", row.comment_allowed}});
  }
  return {{"dialogue_id", q.dialogue_id}, {"language", q.language}, {"transcript", q.transcript}, {"rows", rows}};
}

}  // namespace dialab
