#include <doctest.h>

#include <cmath>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/pipeline.hpp"
#include "dialab/review.hpp"
#include "support.hpp"

using namespace dialab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string instructions() { return read_file(testing::share_dir() / "samples" / "multiwoz_instructions.txt"); }

GenerateOptions bundled_generate() {
  GenerateOptions o;
  o.profile = "multiwoz";
  o.kb_ref = "multiwoz_frankie_and_bennys";
  o.instructions = instructions();
  return o;
}

GoldFile bundled_gold(const Workbench& wb) {
  return load_gold(testing::share_dir() / "samples" / "multiwoz_gold.json", wb.profile("multiwoz"));
}

std::string full_run(const fs::path& data) {
  auto wb = testing::replay_workbench(data);
  const auto gen = cmd_generate(wb, bundled_generate());
  const auto ann = cmd_annotate(wb, gen.corpus_id);
  EvaluateOptions ev;
  ev.gold = bundled_gold(wb);
  const auto report = cmd_evaluate(wb, gen.corpus_id, ev);
  return generate_result_to_json(gen).dump() + "\n" + annotate_result_to_json(ann).dump() + "\n" +
         evaluation_report_to_json(report).dump();
}

// Hand-derived values for the bundled runs: S is the 13 schema pairs; a run
// with k user turns off by one pair (FN, FP or both on the same pair) scores
// (4 - k + k * 12/13) / 4 SA and (4 - k) / 4 JGA.
double sa_with_bad_turns(int k) { return (4.0 - k + k * 12.0 / 13.0) / 4.0; }

}  // namespace

TEST_CASE("replayed generate, annotate and evaluate are byte-identical across runs") {
  testing::TempDir a, b, c;
  const auto first = full_run(a.path());
  CHECK(full_run(b.path()) == first);
  CHECK(full_run(c.path()) == first);
  CHECK(full_run(a.path()) == first);  // re-run over an existing store

  const auto report = json::parse(first.substr(first.rfind('\n') + 1));
  CHECK(report.at("dialogues").size() == 1);
  CHECK(report.at("rows").at(0).at("jga").get<double>() == 0.75);
  CHECK(std::fabs(report.at("rows").at(0).at("sa").get<double>() - sa_with_bad_turns(1)) < 1e-12);
}

TEST_CASE("generated dialogues carry their provenance") {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  const auto gen = cmd_generate(wb, bundled_generate());
  REQUIRE(gen.dialogue_ids.size() == 1);
  const auto d = wb.load_dialogue(gen.dialogue_ids[0]);
  CHECK(d.turns.size() == 8);
  CHECK(d.mode == DialogueMode::one_shot);
  CHECK(d.kb_ref == "multiwoz_frankie_and_bennys");
  CHECK(d.instructions == instructions());
  const auto corpus = wb.load_corpus(gen.corpus_id);
  CHECK(corpus.metadata.at("template_id") == "multiwoz_one_shot");
  CHECK(corpus.metadata.at("chat").at("model") == "gpt-3.5-turbo");
  CHECK(wb.store().contains("prompts", gen.corpus_id));

  cmd_annotate(wb, gen.corpus_id);
  const auto annotated = wb.load_dialogue(gen.dialogue_ids[0]);
  REQUIRE(annotated.predicted_states);
  CHECK(annotated.predicted_states->size() == 4);
}

TEST_CASE("generation option errors") {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  auto o = bundled_generate();
  o.n = 0;
  CHECK_THROWS_CODE(cmd_generate(wb, o), ErrorCode::usage_error);
  o = bundled_generate();
  o.instructions.reset();
  CHECK_THROWS_CODE(cmd_generate(wb, o), ErrorCode::usage_error);
  o = bundled_generate();
  o.mode = DialogueMode::interactive;
  CHECK_THROWS_CODE(cmd_generate(wb, o), ErrorCode::usage_error);
  o = bundled_generate();
  o.instructions = "Find a cheap hotel instead.";
  CHECK_THROWS_CODE(cmd_generate(wb, o), ErrorCode::fixture_miss);
  o.profile = "atis";
  CHECK_THROWS_CODE(cmd_generate(wb, o), ErrorCode::unknown_profile);
}

TEST_CASE("stability over the bundled ten runs") {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  StabilityOptions o;
  o.profile = "multiwoz";
  o.kb_ref = "multiwoz_frankie_and_bennys";
  o.instructions = instructions();
  o.gold = bundled_gold(wb);
  const auto r = cmd_stability(wb, o);
  CHECK(r.report.perfect_count == 3);
  REQUIRE(r.report.runs.size() == 10);
  const int bad_turns[10] = {1, 0, 3, 4, 0, 3, 3, 1, 0, 1};
  for (int i = 0; i < 10; ++i) {
    CHECK(r.report.runs[i].run_index == i + 1);
    CHECK(std::fabs(r.report.runs[i].sa - sa_with_bad_turns(bad_turns[i])) < 1e-12);
    CHECK(r.report.runs[i].jga == (4.0 - bad_turns[i]) / 4.0);
  }
  CHECK(r.report.mean_jga == doctest::Approx(0.6));
  CHECK(wb.store().contains("reports", r.corpus_id));

  o.n = 1;
  const auto one = cmd_stability(wb, o);
  CHECK(one.report.std_sa == 0.0);
  CHECK(one.report.std_jga == 0.0);
  o.n = 0;
  CHECK_THROWS_CODE(cmd_stability(wb, o), ErrorCode::usage_error);
}

TEST_CASE("an unparsable annotation is flagged while the others proceed") {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  testing::script(wb, [](std::span<const ChatMessage> h, const ChatConfig& cfg) -> std::string {
    const auto& prompt = h.front().text;
    if (prompt.starts_with("Create a dialogue")) {
      return cfg.sample == 0 ? "User: I want Thai food.\nSystem: Try the Bangkok City."
                             : "User: I want Korean food.\nSystem: Try Little Seoul.";
    }
    if (prompt.find("Korean") != std::string::npos) return "Sorry, I cannot annotate this dialogue.";
    return "User: I want Thai food.\nmetadata: {\"restaurant\": {\"food\": \"thai\"}}";
  });
  auto o = bundled_generate();
  o.n = 2;
  const auto gen = cmd_generate(wb, o);
  const auto r = cmd_annotate(wb, gen.corpus_id);
  CHECK(r.annotated == std::vector<std::string>{gen.dialogue_ids[0]});
  REQUIRE(r.failed.size() == 1);
  CHECK(r.failed[0].dialogue_id == gen.dialogue_ids[1]);
  CHECK(r.failed[0].code == "NoMetadataFound");
  CHECK_FALSE(wb.load_dialogue(gen.dialogue_ids[1]).predicted_states);

  CorpusRecord empty{"empty", "multiwoz", {}, json::object()};
  wb.save_corpus(empty);
  const auto none = cmd_annotate(wb, "empty");
  CHECK(none.annotated.empty());
  CHECK(none.failed.empty());
}

TEST_CASE("evaluation sources and scopes") {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path(), testing::mini_resources());
  Dialogue d;
  d.id = "mini-1";
  d.profile = "mini";
  d.mode = DialogueMode::one_shot;
  d.kb_ref = "multiwoz_pizza_hut";
  d.instructions = "Book a table.";
  d.turns = {{1, "user", "Italian food please.", "en"}, {2, "system", "Sure.", "en"}};
  const auto italian = BeliefState::from_triplets(std::vector{make_triplet("restaurant", "food", "italian")});
  const auto chinese = BeliefState::from_triplets(std::vector{make_triplet("restaurant", "food", "chinese")});
  d.gold_states = std::vector{italian};
  d.predicted_states = std::vector{italian};
  wb.save_dialogue(d);
  wb.save_corpus({"mini-corpus", "mini", {"mini-1"}, json::object()});

  auto r = cmd_evaluate(wb, "mini-corpus");
  REQUIRE(r.rows.size() == 1);
  CHECK(*r.rows[0].sa == 1.0);
  CHECK(*r.rows[0].jga == 1.0);

  d.predicted_states = std::vector{chinese};
  wb.save_dialogue(d);
  r = cmd_evaluate(wb, "mini-corpus");
  CHECK(*r.rows[0].sa == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(*r.rows[0].jga == 0.0);
  EvaluateOptions scoped;
  scoped.scope = SlotScope::dialogue_gold;
  CHECK(*cmd_evaluate(wb, "mini-corpus", scoped).rows[0].sa == 0.0);

  // Submitted review marks win over states.
  auto task = create_review(wb, "mini-1", ReviewKind::annotation, "expert-1");
  submit_marks(wb, task.id, json::array({{{"turn_index", 1}, {"fn", json::array()}, {"fp", json::array()}}}));
  r = cmd_evaluate(wb, "mini-corpus");
  CHECK(*r.rows[0].sa == 1.0);

  d.id = "mini-2";
  d.gold_states.reset();
  d.predicted_states.reset();
  wb.save_dialogue(d);
  wb.save_corpus({"bare", "mini", {"mini-2"}, json::object()});
  CHECK_THROWS_CODE(cmd_evaluate(wb, "bare"), ErrorCode::no_marks);
}
