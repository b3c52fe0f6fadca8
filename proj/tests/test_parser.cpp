#include <doctest.h>

#include <random>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/transcript_parser.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace dialab;
using namespace gen;

namespace {

const DatasetProfile& multiwoz() { return testing::resources().profiles.get("multiwoz"); }
const DatasetProfile& jilda() { return testing::resources().profiles.get("jilda"); }

std::string booking_text() { return read_file(testing::share_dir() / "samples" / "multiwoz_booking.txt"); }

BeliefState state(std::initializer_list<std::pair<const char*, const char*>> slots) {
  std::vector<Triplet> t;
  for (const auto& [slot, value] : slots) t.push_back(make_triplet("restaurant", slot, value));
  return BeliefState::from_triplets(t);
}

}  // namespace

TEST_CASE("booking sample ingests with its four metadata blocks") {
  const auto corpus = ingest_multiwoz(booking_text(), multiwoz(), "booking");
  REQUIRE(corpus.dialogues.size() == 1);
  const auto& d = corpus.dialogues[0];
  CHECK(d.id == "MUL-BOOK");
  CHECK(d.turns.size() == 8);
  CHECK(d.user_turn_count() == 4);
  REQUIRE(d.gold_states);
  REQUIRE(d.gold_states->size() == 4);
  CHECK(d.gold_states->at(0) == state({{"pricerange", "expensive"}, {"food", "italian"}}));
  CHECK(d.gold_states->at(3).value_of({"restaurant", "time"}) == "11:30");
}

TEST_CASE("booking sample turn updates accumulate to the third-turn state") {
  const auto& schema = multiwoz().require_schema();
  const std::vector<std::vector<Triplet>> updates = {
      {make_triplet("restaurant", "pricerange", "expensive"), make_triplet("restaurant", "food", "Italian")},
      {make_triplet("restaurant", "people", "5"), make_triplet("restaurant", "time", "11:30"),
       make_triplet("restaurant", "day", "Sunday")},
      {make_triplet("restaurant", "time", "10:30")},
  };
  BeliefState s;
  for (const auto& u : updates) s = accumulate_belief(schema, s, u);
  const auto expected =
      state({{"pricerange", "expensive"}, {"food", "italian"}, {"people", "5"}, {"time", "10:30"}, {"day", "sunday"}});
  CHECK(s == expected);
  CHECK(s.pairs().size() == 5);

  // Same result from the deltas between the sample's cumulative snapshots.
  const auto d = ingest_multiwoz(booking_text(), multiwoz(), "booking").dialogues[0];
  BeliefState replayed, prev;
  for (int k = 0; k < 3; ++k) {
    const auto& snap = d.gold_states->at(k);
    replayed = accumulate_belief(schema, replayed, belief_delta(prev, snap));
    prev = snap;
  }
  CHECK(replayed == expected);
}

TEST_CASE("accumulation rejects undeclared pairs and duplicates") {
  const auto& schema = multiwoz().require_schema();
  const std::vector<Triplet> bad = {make_triplet("restaurant", "colour", "red")};
  CHECK_THROWS_CODE(accumulate_belief(schema, {}, bad), ErrorCode::schema_violation);
  const std::vector<Triplet> dup = {make_triplet("restaurant", "food", "thai"), make_triplet("restaurant", "food", "x")};
  CHECK_THROWS_CODE(accumulate_belief(schema, {}, dup), ErrorCode::duplicate_pair);
}

TEST_CASE("annotation parsing repairs the broken quotes of the sample") {
  const auto d = ingest_multiwoz(booking_text(), multiwoz(), "booking").dialogues[0];
  const auto r = parse_annotations(booking_text(), multiwoz(), &d);
  REQUIRE(r.ok());
  REQUIRE(r.value->size() == 4);
  CHECK(r.value->at(2).turn_index == 5);
  CHECK(r.value->at(2).state.value_of({"restaurant", "time"}) == "10:30");
  CHECK(r.count("UnbalancedQuotes") == 4);
}

TEST_CASE("numbered transcripts with a system name") {
  const auto text = read_file(testing::share_dir() / "scripts" / "generation.txt");
  const auto r = parse_dialogue(text, multiwoz());
  REQUIRE(r.ok());
  CHECK(r.warnings.empty());
  REQUIRE(r.value->turns.size() == 8);
  CHECK(r.value->turns[1].speaker == "system");
  CHECK(r.value->turns[1].text.starts_with("There is an expensive Italian restaurant"));
}

TEST_CASE("lenient dialogue parsing") {
  const auto r = parse_dialogue("Here is the dialogue:\n\nUser: hello\nthere\nRobot: hi\n\n\nSystem: welcome\n", multiwoz());
  REQUIRE(r.ok());
  CHECK(r.count("IgnoredLine") == 1);
  CHECK(r.count("UnknownSpeaker") == 1);
  REQUIRE(r.value->turns.size() == 3);
  CHECK(r.value->turns[0].text == "hello\nthere");
  CHECK(r.value->turns[1].speaker == std::string(kUnknownRole));

  const auto it = parse_dialogue("Navigator: Buongiorno, come posso aiutarla?\nUtente: Cerco lavoro.\n", jilda());
  REQUIRE(it.ok());
  CHECK(it.value->turns[0].speaker == "system");
  CHECK(it.value->turns[1].language == "it");

  const auto none = parse_dialogue("no speakers here\nat all", multiwoz());
  REQUIRE_FALSE(none.ok());
  CHECK(none.fatal->code() == ErrorCode::no_turns_found);
}

TEST_CASE("annotation parsing edge cases") {
  const auto none = parse_annotations("User: hi\nSystem: hello", multiwoz());
  REQUIRE_FALSE(none.ok());
  CHECK(none.fatal->code() == ErrorCode::no_metadata_found);

  const auto flat = parse_annotations("metadata: {\"job description\": \"developer\", \"contract\": \"\"}", jilda());
  REQUIRE(flat.ok());
  CHECK(flat.value->at(0).state.value_of({"job", "job_description"}) == "developer");
  CHECK(flat.count("EmptyValue") == 1);

  const auto unknown = parse_annotations("metadata: {\"restaurant\": {\"colour\": \"red\", \"food\": \"thai\"}}", multiwoz());
  REQUIRE(unknown.ok());
  CHECK(unknown.count("UnknownSlot") == 1);
  CHECK(unknown.value->at(0).state.size() == 1);
}

TEST_CASE("metadata formatting parses back") {
  const auto s = state({{"pricerange", "expensive"}, {"food", "italian"}, {"time", "10:30"}});
  const auto r = parse_annotations(format_metadata(s, multiwoz()), multiwoz());
  REQUIRE(r.ok());
  CHECK(r.warnings.empty());
  CHECK(r.value->at(0).state == s);
}

TEST_CASE("serialize then parse preserves turns, roles and text") {
  std::mt19937 rng(42);
  std::vector<Dialogue> cases;
  for (int k = 0; k < 50; ++k) cases.push_back(random_dialogue(rng, k));
  cases.push_back(ingest_multiwoz(booking_text(), multiwoz(), "booking").dialogues[0]);
  int preserved = 0;
  for (const auto& d : cases) {
    const auto r = parse_dialogue(serialize_dialogue(d), multiwoz());
    REQUIRE_MESSAGE(r.ok(), d.id);
    bool same = r.value->turns.size() == d.turns.size();
    for (std::size_t i = 0; same && i < d.turns.size(); ++i) {
      same = r.value->turns[i].index == d.turns[i].index && r.value->turns[i].speaker == d.turns[i].speaker &&
             r.value->turns[i].text == d.turns[i].text;
    }
    CHECK_MESSAGE(same, serialize_dialogue(d));
    preserved += same;
  }
  CHECK(preserved == 51);
}
