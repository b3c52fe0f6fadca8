// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/metrics.hpp"
#include "dialab/pipeline.hpp"
#include "dialab/prompt.hpp"
#include "dialab/review.hpp"
#include "dialab/transcript_parser.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dialab;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

const DatasetProfile& multiwoz() { return testing::resources().profiles.get("multiwoz"); }

std::string sample(const char* name) { return read_file(testing::share_dir() / "samples" / name); }

Outcome metric_oracle() {
  std::mt19937 rng(20240611);
  const auto start = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = gen::random_instance(rng);
    const auto m = gen::to_marks(inst.turns);
    const auto s = gen::to_pairs(inst.s);
    if (std::fabs(slot_accuracy(m, s) - oracle::slot_accuracy(inst.turns, inst.s)) > 1e-12) ++mismatches;
    if (std::fabs(joint_goal_accuracy(m) - oracle::joint_goal_accuracy(inst.turns)) > 1e-12) ++mismatches;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mismatches == 0 && secs < 5.0, std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s"};
}

Outcome sa_identity() {
  std::mt19937 rng(20240611);
  int breaks = 0, turns = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = gen::random_instance(rng);
    const auto s = gen::to_pairs(inst.s);
    for (const auto& t : gen::to_marks(inst.turns)) {
      ++turns;
      breaks += turn_slot_accuracy(t, s) != turn_slot_accuracy_union(t, s);
    }
  }
  return {breaks == 0, std::to_string(breaks) + " of " + std::to_string(turns) + " turns differ"};
}

Outcome worked_values() {
  const PairSet s = {{"restaurant", "food"}, {"restaurant", "area"}, {"restaurant", "pricerange"},
                     {"restaurant", "people"}, {"restaurant", "time"}};
  TurnMarks same, disjoint, wrong, ok1, ok3;
  same.turn_index = disjoint.turn_index = 1;
  same.fn_triplets = disjoint.fn_triplets = {make_triplet("restaurant", "food", "italian")};
  same.fp_triplets = {make_triplet("restaurant", "food", "chinese")};
  disjoint.fp_triplets = {make_triplet("restaurant", "area", "centre")};
  ok1.turn_index = 1;
  wrong.turn_index = 3;
  wrong.fn_triplets = {make_triplet("restaurant", "food", "italian")};
  ok3.turn_index = 5;
  const double a = slot_accuracy(std::vector{same}, s);
  const double b = slot_accuracy(std::vector{disjoint}, s);
  const double j = joint_goal_accuracy(std::vector{ok1, wrong, ok3});
  const bool pass = std::fabs(a - 0.8) < 1e-12 && std::fabs(b - 0.6) < 1e-12 && std::fabs(j - 2.0 / 3.0) < 1e-9 &&
                    std::fabs(j - 0.6667) < 1e-4;
  return {pass, "SA " + fmt(a) + ", SA " + fmt(b) + ", JGA " + fmt(j)};
}

Outcome table_marginals() {
  const std::map<CellKey, double> cells = {
      {{"multiwoz", "reference"}, 1.81}, {{"multiwoz", "one_shot"}, 1.60}, {{"multiwoz", "interactive"}, 1.83},
      {{"jilda", "reference"}, 1.01},    {{"jilda", "one_shot"}, 0.81},    {{"jilda", "interactive"}, 1.33},
      {{"wired", "reference"}, 1.61},    {{"wired", "one_shot"}, 1.78},    {{"wired", "interactive"}, 1.38},
  };
  const auto r = marginals_from_cells(cells);
  struct Expect {
    double got, want, tol;
  };
  const std::vector<Expect> checks = {
      {r.rows.at("multiwoz").macro, 1.75, 0.005},        {r.rows.at("jilda").macro, 1.05, 0.005},
      {r.rows.at("wired").macro, 1.59, 0.005},           {r.columns.at("reference").macro, 1.48, 0.005},
      {r.columns.at("one_shot").macro, 1.40, 0.005},     {r.columns.at("interactive").macro, 1.52, 0.015},
      {r.grand.macro, 1.46, 0.005},
  };
  bool pass = true;
  for (const auto& c : checks) pass = pass && std::fabs(c.got - c.want) <= c.tol;
  return {pass, "interactive column " + fmt(r.columns.at("interactive").macro) + " vs printed 1.52"};
}

Outcome belief_accumulation() {
  const auto& schema = multiwoz().require_schema();
  const auto d = ingest_multiwoz(sample("multiwoz_booking.txt"), multiwoz(), "booking").dialogues.at(0);
  BeliefState replayed, prev;
  for (int k = 0; k < 3; ++k) {
    const auto& snap = d.gold_states->at(k);
    replayed = accumulate_belief(schema, replayed, belief_delta(prev, snap));
    prev = snap;
  }
  const auto expected = BeliefState::from_triplets(std::vector{
      make_triplet("restaurant", "pricerange", "expensive"), make_triplet("restaurant", "food", "italian"),
      make_triplet("restaurant", "people", "5"), make_triplet("restaurant", "time", "10:30"),
      make_triplet("restaurant", "day", "sunday")});
  return {replayed == expected, std::to_string(replayed.pairs().size()) + " pairs, time=" +
                                    replayed.value_of({"restaurant", "time"}).value_or("none")};
}

Outcome parser_round_trip() {
  std::mt19937 rng(99);
  std::vector<Dialogue> cases;
  for (int k = 0; k < 50; ++k) cases.push_back(gen::random_dialogue(rng, k));
  cases.push_back(ingest_multiwoz(sample("multiwoz_booking.txt"), multiwoz(), "booking").dialogues.at(0));
  int preserved = 0;
  for (const auto& d : cases) {
    const auto r = parse_dialogue(serialize_dialogue(d), multiwoz());
    if (!r.ok() || r.value->turns.size() != d.turns.size()) continue;
    bool same = true;
    for (std::size_t i = 0; same && i < d.turns.size(); ++i) {
      same = r.value->turns[i].index == d.turns[i].index && r.value->turns[i].speaker == d.turns[i].speaker &&
             r.value->turns[i].text == d.turns[i].text;
    }
    preserved += same;
  }
  return {preserved == static_cast<int>(cases.size()),
          std::to_string(preserved) + " of " + std::to_string(cases.size()) + " preserved"};
}

GenerateOptions bundled_generate() {
  GenerateOptions o;
  o.profile = "multiwoz";
  o.kb_ref = "multiwoz_frankie_and_bennys";
  o.instructions = sample("multiwoz_instructions.txt");
  return o;
}

Outcome replay_determinism() {
  std::vector<std::string> reports;
  for (int run = 0; run < 3; ++run) {
    testing::TempDir dir;
    auto wb = testing::replay_workbench(dir.path());
    const auto gen = cmd_generate(wb, bundled_generate());
    const auto ann = cmd_annotate(wb, gen.corpus_id);
    EvaluateOptions ev;
    ev.gold = load_gold(testing::share_dir() / "samples" / "multiwoz_gold.json", wb.profile("multiwoz"));
    reports.push_back(generate_result_to_json(gen).dump() + annotate_result_to_json(ann).dump() +
                      evaluation_report_to_json(cmd_evaluate(wb, gen.corpus_id, ev)).dump());
  }
  const bool pass = reports[0] == reports[1] && reports[1] == reports[2];
  return {pass, std::to_string(reports[0].size()) + " bytes per run"};
}

Outcome stability_fixture() {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  StabilityOptions o;
  o.profile = "multiwoz";
  o.kb_ref = "multiwoz_frankie_and_bennys";
  o.instructions = sample("multiwoz_instructions.txt");
  o.gold = load_gold(testing::share_dir() / "samples" / "multiwoz_gold.json", wb.profile("multiwoz"));
  const auto r = cmd_stability(wb, o).report;
  return {r.perfect_count == 3 && r.runs.size() == 10,
          "perfect_count " + std::to_string(r.perfect_count) + ", " + std::to_string(r.runs.size()) + " rows"};
}

bool in_order(const std::string& text, std::initializer_list<std::string_view> needles) {
  std::size_t from = 0;
  for (auto n : needles) {
    const auto at = text.find(n, from);
    if (at == std::string::npos) return false;
    from = at + n.size();
  }
  return true;
}

Outcome prompt_conformance() {
  const auto& res = testing::resources();
  std::string instructions = sample("multiwoz_instructions.txt");
  while (!instructions.empty() && std::isspace(static_cast<unsigned char>(instructions.back()))) instructions.pop_back();
  const auto one_shot = build_generation_prompt(res.templates, multiwoz(), DialogueMode::one_shot,
                                                &res.kb("multiwoz_pizza_hut"), instructions);
  const bool a = one_shot.text.starts_with("Create a dialogue between a user and a system.") &&
                 in_order(one_shot.text, {"Create a dialogue between a user and a system.", "Cambridge InfoTown",
                                          "Domain Knowledge:", "the instructions for the user are the following: "}) &&
                 one_shot.text.ends_with(instructions);
  const auto interactive = build_generation_prompt(res.templates, res.profiles.get("jilda"), DialogueMode::interactive,
                                                   &res.kb("jilda_job_offers"), std::nullopt);
  const bool b = interactive.text.ends_with(
      "I will start acting like a user needing of information about job offers starting from my next message.");
  return {a && b, std::string("one-shot ") + (a ? "ok" : "bad") + ", interactive " + (b ? "ok" : "bad")};
}

Outcome significance_sanity() {
  const std::vector<double> same = {1, 2, 3, 2, -1};
  const double p_same = significance_test(same, same).p_value;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 5);
  static const double kScores[] = {-3, -2, -1, 1, 2, 3};
  int checked = 0, disagreements = 0;
  for (std::size_t na = 1; na <= 7; ++na) {
    for (std::size_t nb = 1; na + nb <= 8; ++nb) {
      for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < na; ++i) a.push_back(kScores[pick(rng)]);
        for (std::size_t i = 0; i < nb; ++i) b.push_back(kScores[pick(rng)]);
        ++checked;
        disagreements += std::fabs(significance_test(a, b).p_value - oracle::permutation_p(a, b)) > 1e-9;
      }
    }
  }
  return {p_same == 1.0 && disagreements == 0,
          "p(identical) " + fmt(p_same) + ", " + std::to_string(disagreements) + " of " + std::to_string(checked) +
              " disagree"};
}

bool rejected(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == ErrorCode::missing_prerequisite;
  }
  return false;
}

Outcome review_prerequisites() {
  testing::TempDir dir;
  auto wb = testing::replay_workbench(dir.path());
  Dialogue d;
  d.profile = "multiwoz";
  d.turns = {{1, "user", "I want a cheap place.", "en"}, {2, "system", "Pizza Hut City Centre is cheap.", "en"}};
  d.id = "interactive-1";
  d.mode = DialogueMode::interactive;
  d.kb_ref = "multiwoz_pizza_hut";
  wb.save_dialogue(d);
  d.id = "reference-1";
  d.mode = DialogueMode::reference;
  d.kb_ref.reset();
  wb.save_dialogue(d);
  const bool a = rejected([&] { create_review(wb, "interactive-1", ReviewKind::instruction_adherence, "e1"); });
  const bool b = rejected([&] { create_review(wb, "reference-1", ReviewKind::domain_adherence, "e1"); });
  return {a && b, std::string("instruction on interactive ") + (a ? "rejected" : "accepted") +
                      ", domain without KB " + (b ? "rejected" : "accepted")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"metric oracle equivalence", metric_oracle},
      {"slot accuracy identity", sa_identity},
      {"worked metric values", worked_values},
      {"quality table marginals", table_marginals},
      {"belief accumulation", belief_accumulation},
      {"parser round trip", parser_round_trip},
      {"replay determinism", replay_determinism},
      {"stability fixture", stability_fixture},
      {"prompt conformance", prompt_conformance},
      {"significance sanity", significance_sanity},
      {"review prerequisites", review_prerequisites},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
