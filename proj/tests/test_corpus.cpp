#include <doctest.h>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/questionnaire.hpp"
#include "support.hpp"

using namespace dialab;

namespace {

const DatasetProfile& multiwoz() { return testing::resources().profiles.get("multiwoz"); }

Dialogue sample_dialogue() {
  return ingest_multiwoz(read_file(testing::share_dir() / "samples" / "multiwoz_booking.txt"), multiwoz(), "booking")
      .dialogues[0];
}

}  // namespace

TEST_CASE("normalization") {
  CHECK(normalize_value("  Cheap   Restaurant ") == "cheap restaurant");
  CHECK(make_triplet(" Restaurant", "FOOD ", "Italian") == Triplet{"restaurant", "food", "italian"});
  CHECK_THROWS_CODE(make_triplet("restaurant", "food", "   "), ErrorCode::invalid_argument);
}

TEST_CASE("dialogue validation") {
  auto d = sample_dialogue();
  CHECK(validate_dialogue(d).empty());
  d.turns[2].index = 2;
  d.turns[5].text = "";
  auto v = validate_dialogue(d);
  REQUIRE(v.size() >= 2);
  CHECK(v[0].code == "NonMonotoneIndex");
  d = sample_dialogue();
  d.gold_states->pop_back();
  CHECK(validate_dialogue(d).at(0).code == "GoldLengthMismatch");
}

TEST_CASE("dialogue JSON round trip") {
  auto d = sample_dialogue();
  d.mode = DialogueMode::one_shot;
  d.kb_ref = "multiwoz_frankie_and_bennys";
  d.instructions = "Book a table.";
  d.predicted_states = d.gold_states;
  CHECK(dialogue_from_json(dialogue_to_json(d), multiwoz()) == d);
  auto j = dialogue_to_json(d);
  j["turns"][0]["index"] = 7;
  CHECK(validate_dialogue(dialogue_from_json(j, multiwoz())).at(0).code == "NonMonotoneIndex");
  j["turns"][0]["speaker"] = "narrator";
  CHECK_THROWS_CODE(dialogue_from_json(j, multiwoz()), ErrorCode::format_error);
  j = dialogue_to_json(d);
  j["gold_states"][0].push_back({{"domain", "restaurant"}, {"slot", "colour"}, {"value", "red"}});
  CHECK_THROWS_CODE(dialogue_from_json(j, multiwoz()), ErrorCode::schema_violation);
}

TEST_CASE("generic ingest skips bad records and keeps the rest") {
  auto d = sample_dialogue();
  Corpus c{"c1", "multiwoz", {d}};
  auto second = d;
  second.id = "second";
  c.dialogues.push_back(second);
  std::string text = export_corpus(c);
  text += "{not json\n";
  text += dialogue_to_json(d).dump() + "\n";  // duplicate id
  const auto report = ingest_generic(text, multiwoz(), "c1");
  CHECK(report.corpus.dialogues.size() == 2);
  REQUIRE(report.issues.size() == 2);
  CHECK(report.issues[0].line == 3);
  CHECK(report.issues[0].code == "ParseError");
  CHECK(report.issues[1].code == "DuplicateId");
  CHECK(report.corpus.find("second") != nullptr);
}

TEST_CASE("MultiWOZ layout errors") {
  CHECK_THROWS_CODE(ingest_multiwoz("User: hello\nSystem: hi\n", multiwoz(), "x"), ErrorCode::format_error);
  CHECK_THROWS_CODE(ingest_multiwoz("User: hello\nmetadata: {\"restaurant\": {\"colour\": \"red\"}}\nSystem: hi\n",
                                    multiwoz(), "x"),
                    ErrorCode::schema_violation);
  const auto c = ingest_multiwoz("User: hello\nmetadata: {\"restaurant\": {\"food\": \"thai\"}}\nSystem: hi\n",
                                 multiwoz(), "plain");
  CHECK(c.dialogues.at(0).id == "plain-1");
}

TEST_CASE("knowledge base JSON keeps attribute order") {
  const auto& kb = testing::resources().kb("multiwoz_pizza_hut");
  CHECK(kb_from_json(kb_to_json(kb)).entities() == kb.entities());
  CHECK(kb_to_json(kb).dump() == kb_to_json(kb_from_json(kb_to_json(kb))).dump());
}

TEST_CASE("questionnaire export") {
  const auto d = sample_dialogue();
  const auto en = export_questionnaire(d, "en");
  REQUIRE(en.rows.size() == 6);
  CHECK(en.rows[0].statement_text == "Requests and responses are consistent across the dialogue.");
  CHECK(en.rows[5].options[5] == "Strongly Agree");
  CHECK(en.rows[0].comment_allowed);
  const auto it = export_questionnaire(d, "it-IT");
  CHECK(it.language == "it");
  CHECK(it.rows[5].statement_text == "Il dialogo arriva ad una conclusione.");
  CHECK_THROWS_CODE(export_questionnaire(d, "fr"), ErrorCode::unsupported_language);

  const auto csv = questionnaire_to_csv(en);
  CHECK(csv.starts_with("dialogue_id,statement_index,statement_text,option_1,option_2,option_3,option_4,option_5,"
                        "option_6,comment_allowed\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.find("\"Participants are respectful towards each other (no offensive/discriminatory language is used).\"") ==
        std::string::npos);
  const auto j = questionnaire_to_json(en);
  CHECK(j.at("rows").size() == 6);
  CHECK(j.at("transcript").get<std::string>().starts_with("1. User: I am looking for an expensive"));
}
