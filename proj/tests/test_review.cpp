#include <doctest.h>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/review.hpp"
#include "support.hpp"

using namespace dialab;
using nlohmann::json;

namespace {

Dialogue base(std::string id, DialogueMode mode) {
  Dialogue d;
  d.id = std::move(id);
  d.profile = "mini";
  d.mode = mode;
  d.turns = {{1, "user", "I want a cheap Italian place.", "en"},
             {2, "system", "Pizza Hut City Centre is cheap and serves italian food.", "en"},
             {3, "user", "Book it for two at 19:00.", "en"},
             {4, "system", "Done, enjoy your evening.", "en"}};
  return d;
}

BeliefState st(std::initializer_list<std::pair<const char*, const char*>> slots) {
  std::vector<Triplet> t;
  for (const auto& [slot, value] : slots) t.push_back(make_triplet("restaurant", slot, value));
  return BeliefState::from_triplets(t);
}

struct Fixture {
  testing::TempDir dir;
  Workbench wb = testing::replay_workbench(dir.path(), testing::mini_resources());

  Fixture() {
    auto one_shot = base("os-1", DialogueMode::one_shot);
    one_shot.kb_ref = "multiwoz_pizza_hut";
    one_shot.instructions = "Find a cheap italian restaurant and book for two.";
    one_shot.predicted_states = std::vector{st({{"food", "italian"}}), st({{"food", "italian"}, {"people", "2"}})};
    wb.save_dialogue(one_shot);

    auto interactive = base("int-1", DialogueMode::interactive);
    interactive.kb_ref = "multiwoz_pizza_hut";
    wb.save_dialogue(interactive);

    wb.save_dialogue(base("ref-1", DialogueMode::reference));
  }
};

json fn_fp(int turn, json fn, json fp) { return {{"turn_index", turn}, {"fn", fn}, {"fp", fp}}; }
json triplet(const char* slot, const char* value) {
  return {{"domain", "restaurant"}, {"slot", slot}, {"value", value}};
}

}  // namespace

TEST_CASE("review prerequisites") {
  Fixture f;
  CHECK_THROWS_CODE(create_review(f.wb, "int-1", ReviewKind::instruction_adherence, "e1"),
                    ErrorCode::missing_prerequisite);
  CHECK_THROWS_CODE(create_review(f.wb, "ref-1", ReviewKind::domain_adherence, "e1"), ErrorCode::missing_prerequisite);
  CHECK_THROWS_CODE(create_review(f.wb, "ref-1", ReviewKind::annotation, "e1"), ErrorCode::missing_prerequisite);
  CHECK_THROWS_CODE(create_review(f.wb, "nope", ReviewKind::annotation, "e1"), ErrorCode::not_found);
  CHECK_NOTHROW(create_review(f.wb, "int-1", ReviewKind::domain_adherence, "e1"));
  CHECK_NOTHROW(create_review(f.wb, "os-1", ReviewKind::instruction_adherence, "e1"));
}

TEST_CASE("annotation review of the same-pair example") {
  Fixture f;
  const auto task = create_review(f.wb, "os-1", ReviewKind::annotation, "e1");
  CHECK(task.state == ReviewState::pending);
  REQUIRE(task.turns.size() == 2);
  CHECK(task.turns[1].turn_index == 3);

  const json marks = json::array({fn_fp(1, json::array({triplet("food", "italian")}), json::array({triplet("food", "chinese")})),
                                  fn_fp(3, json::array(), json::array())});
  const auto outcome = submit_marks(f.wb, task.id, marks, task.version);
  CHECK(*outcome.sa == doctest::Approx((0.8 + 1.0) / 2).epsilon(1e-12));
  CHECK(*outcome.jga == 0.5);
  CHECK(outcome.task.state == ReviewState::submitted);
  CHECK(load_review(f.wb, task.id).state == ReviewState::submitted);
  CHECK_THROWS_CODE(submit_marks(f.wb, task.id, marks), ErrorCode::task_submitted);
  CHECK(submitted_reviews(f.wb, "os-1").size() == 1);
}

TEST_CASE("gold edits derive the false negatives and positives") {
  Fixture f;
  const auto task = create_review(f.wb, "os-1", ReviewKind::annotation, "e1");
  const json marks = json::array(
      {{{"turn_index", 1}, {"gold", json::array({triplet("food", "italian")})}},
       {{"turn_index", 3}, {"gold", json::array({triplet("food", "italian"), triplet("people", "2"), triplet("time", "19:00")})}}});
  const auto outcome = submit_marks(f.wb, task.id, marks);
  CHECK(outcome.task.marks[0].clean());
  CHECK(outcome.task.marks[1].fn_triplets == TripletSet{make_triplet("restaurant", "time", "19:00")});
  CHECK(*outcome.sa == doctest::Approx((1.0 + 0.8) / 2));
}

TEST_CASE("marks validation") {
  Fixture f;
  const auto task = create_review(f.wb, "os-1", ReviewKind::annotation, "e1");
  CHECK_THROWS_CODE(submit_marks(f.wb, task.id, json::array({fn_fp(1, json::array(), json::array())})),
                    ErrorCode::incomplete_marks);
  const json outside = json::array({fn_fp(1, json::array({{{"domain", "train"}, {"slot", "day"}, {"value", "monday"}}}),
                                          json::array()),
                                    fn_fp(3, json::array(), json::array())});
  CHECK_THROWS(submit_marks(f.wb, task.id, outside));
  const json ok = json::array({fn_fp(1, json::array(), json::array()), fn_fp(3, json::array(), json::array())});
  CHECK_THROWS_CODE(submit_marks(f.wb, task.id, ok, task.version + 5), ErrorCode::version_conflict);
  CHECK(load_review(f.wb, task.id).state == ReviewState::pending);
  CHECK(*submit_marks(f.wb, task.id, ok, task.version).sa == 1.0);
}

TEST_CASE("domain adherence review") {
  Fixture f;
  const auto task = create_review(f.wb, "int-1", ReviewKind::domain_adherence, "e1");
  REQUIRE(task.turns.size() == 2);
  CHECK(task.turns[0].suggested_relevant);
  CHECK_FALSE(task.turns[1].suggested_relevant);
  const json marks = json::array({{{"turn_index", 2}, {"domain_score", 0}}, {{"turn_index", 4}}});
  auto outcome = submit_marks(f.wb, task.id, marks);
  CHECK(*outcome.adherence == 0.0);
  CHECK_FALSE(outcome.sa);

  const auto again = create_review(f.wb, "int-1", ReviewKind::domain_adherence, "e2");
  CHECK(again.id != task.id);
  const json none_relevant = json::array({{{"turn_index", 2}, {"relevant", false}}, {{"turn_index", 4}, {"relevant", false}}});
  CHECK_THROWS_CODE(submit_marks(f.wb, again.id, none_relevant), ErrorCode::no_relevant_turns);
}

TEST_CASE("instruction adherence review") {
  Fixture f;
  const auto task = create_review(f.wb, "os-1", ReviewKind::instruction_adherence, "e1");
  REQUIRE(task.turns.size() == 2);
  CHECK(task.turns[0].speaker == "user");
  const json marks =
      json::array({{{"turn_index", 1}, {"instruction_score", true}}, {{"turn_index", 3}, {"instruction_score", 0}}});
  CHECK(*submit_marks(f.wb, task.id, marks).adherence == 0.5);
}

TEST_CASE("review JSON round trip and KB mentions") {
  Fixture f;
  const auto task = create_review(f.wb, "int-1", ReviewKind::domain_adherence, "e1");
  const auto back = review_task_from_json(review_task_to_json(task));
  CHECK(back.id == task.id);
  CHECK(back.kind == ReviewKind::domain_adherence);
  CHECK(back.turns.size() == task.turns.size());
  const auto& kb = testing::resources().kb("multiwoz_pizza_hut");
  CHECK(mentions_kb("We recommend PIZZA HUT CITY CENTRE.", kb));
  CHECK_FALSE(mentions_kb("Goodbye!", kb));
  CHECK(parse_review_kind("instruction_adherence") == ReviewKind::instruction_adherence);
  CHECK_THROWS_CODE(parse_review_kind("vibes"), ErrorCode::invalid_argument);
}
