#include <doctest.h>

#include "dialab/corpus_io.hpp"
#include "dialab/digest.hpp"
#include "dialab/error.hpp"
#include "dialab/prompt.hpp"
#include "support.hpp"

using namespace dialab;

namespace {

const Resources& res() { return testing::resources(); }

// True when every needle occurs, each after the previous one.
bool in_order(const std::string& text, std::initializer_list<std::string_view> needles) {
  std::size_t from = 0;
  for (auto n : needles) {
    auto at = text.find(n, from);
    if (at == std::string::npos) return false;
    from = at + n.size();
  }
  return true;
}

const std::string kInstructions = "You are looking for a cheap restaurant in the centre.";

}  // namespace

TEST_CASE("one-shot MultiWOZ prompt layout") {
  const auto& p = res().profiles.get("multiwoz");
  const auto prompt = build_generation_prompt(res().templates, p, DialogueMode::one_shot,
                                              &res().kb("multiwoz_pizza_hut"), kInstructions);
  CHECK(prompt.template_id == "multiwoz_one_shot");
  CHECK(prompt.text.starts_with("Create a dialogue between a user and a system."));
  CHECK(in_order(prompt.text, {"Create a dialogue between a user and a system.",
                               "called \"Cambridge InfoTown\" asks the user all the needed information",
                               "Domain Knowledge:", "name: pizza hut city centre",
                               "the instructions for the user are the following: "}));
  CHECK(prompt.text.ends_with(kInstructions));
  CHECK(prompt.bound_values.at("user_instructions") == sha256_hex(kInstructions));
  CHECK(prompt.bound_values.count("kb") == 1);
}

TEST_CASE("interactive JILDA prompt ends with the acting-as-user sentence") {
  const auto& p = res().profiles.get("jilda");
  const auto prompt = build_generation_prompt(res().templates, p, DialogueMode::interactive,
                                              &res().kb("jilda_job_offers"), std::nullopt);
  CHECK(prompt.text.starts_with("Simulate to be a system and respond to a user in Italian."));
  CHECK(in_order(prompt.text, {"Simulate to be a system", "called Navigator", "Knowledge base:", "Job offers:",
                               "I will start acting like a user"}));
  CHECK(prompt.text.ends_with(
      "I will start acting like a user needing of information about job offers starting from my next message."));
}

TEST_CASE("generation prompt preconditions") {
  const auto& mw = res().profiles.get("multiwoz");
  const auto* kb = &res().kb("multiwoz_pizza_hut");
  CHECK_THROWS_CODE(build_generation_prompt(res().templates, mw, DialogueMode::one_shot, kb, std::nullopt),
                    ErrorCode::missing_instructions);
  CHECK_THROWS_CODE(build_generation_prompt(res().templates, mw, DialogueMode::one_shot, nullptr, kInstructions),
                    ErrorCode::missing_kb);
  CHECK_THROWS_CODE(build_generation_prompt(res().templates, mw, DialogueMode::interactive, kb, kInstructions),
                    ErrorCode::invalid_argument);
  CHECK_THROWS_CODE(build_generation_prompt(res().templates, mw, DialogueMode::reference, kb, kInstructions),
                    ErrorCode::invalid_argument);
  const auto wired = build_generation_prompt(res().templates, res().profiles.get("wired"), DialogueMode::one_shot,
                                             &res().kb("wired_machine_learning"), std::string("Ask about overfitting."));
  CHECK(wired.text.find("{{") == std::string::npos);
}

TEST_CASE("annotation prompt binds the schema, example and dialogue") {
  const auto& p = res().profiles.get("multiwoz");
  const auto d = ingest_multiwoz(read_file(testing::share_dir() / "samples" / "multiwoz_booking.txt"), p, "booking").dialogues[0];
  const auto with = build_annotation_prompt(res().templates, p, d, res().annotation_example(p));
  CHECK(with.text.starts_with("Write annotations about a dialogue that I will send you."));
  CHECK(with.text.find("\"pricerange\" (") != std::string::npos);
  CHECK(with.text.find("london kings cross") != std::string::npos);
  CHECK(in_order(with.text, {"Example of dialog:", "Example of annotations:", "1. User: I am looking for an expensive",
                             "Annotate only the User's turns."}));
  const auto without = build_annotation_prompt(res().templates, p, d);
  CHECK(without.text.find("Example of dialog:") == std::string::npos);
  Dialogue empty;
  empty.id = "e";
  CHECK_THROWS_CODE(build_annotation_prompt(res().templates, p, empty), ErrorCode::empty_dialogue);
}

TEST_CASE("template parsing") {
  const auto t = parse_template("id: x_one_shot\nlanguage: en\nmode: one_shot\n--- task_instruction\nDo it.\n"
                                "--- user_instructions\n{{user_instructions}}\n");
  CHECK(t.sections.size() == 2);
  CHECK(t.has_section(SectionKind::user_instructions));
  CHECK_THROWS_CODE(parse_template("language: en\nmode: one_shot\n--- task_instruction\nx\n"), ErrorCode::invalid_template);
  CHECK_THROWS_CODE(parse_template("id: a\nlanguage: en\nmode: one_shot\n--- nonsense\nx\n"), ErrorCode::invalid_template);
  CHECK_THROWS_CODE(parse_template("id: a\nlanguage: en\nmode: one_shot\n--- task_instruction\n{{mystery}}\n"),
                    ErrorCode::invalid_template);
  CHECK_THROWS_CODE(parse_template("id: a\nlanguage: en\nmode: interactive\n--- task_instruction\nx\n"
                                   "--- user_instructions\n{{user_instructions}}\n"),
                    ErrorCode::invalid_template);
}

TEST_CASE("knowledge base rendering") {
  const auto text = render_kb(res().kb("multiwoz_pizza_hut"), KbStyle::attribute_lines);
  CHECK(text.find("name: pizza hut city centre") != std::string::npos);
  CHECK(text.find("pricerange: cheap") != std::string::npos);
  const auto offers = render_kb(res().kb("jilda_job_offers"), KbStyle::numbered_offers);
  CHECK(offers.starts_with("1."));
}

TEST_CASE("profile templates are checked") {
  for (const auto& name : res().profiles.names()) {
    CHECK_NOTHROW(check_profile_templates(res().profiles.get(name), res().templates));
  }
}
