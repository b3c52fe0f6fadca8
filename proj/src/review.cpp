#include "dialab/review.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "dialab/error.hpp"

namespace dialab {

using nlohmann::json;

namespace {

std::string kind_tag(ReviewKind kind) {
  switch (kind) {
    case ReviewKind::annotation: return "ann";
    case ReviewKind::domain_adherence: return "dom";
    case ReviewKind::instruction_adherence: return "ins";
  }
  return "ann";
}

std::string review_prefix(std::string_view dialogue_id) { return "rv-" + std::string(dialogue_id) + "-"; }

TripletSet triplets_from_json(const json& arr, const DatasetProfile& profile) {
  TripletSet out;
  if (!arr.is_array()) throw Error(ErrorCode::invalid_argument, "triplet list must be an array");
  for (const auto& t : arr) {
    Triplet triplet = t.is_array() ? make_triplet(t.at(0).get<std::string>(),
                                                  profile.resolve_slot(t.at(1).get<std::string>()),
                                                  t.at(2).get<std::string>())
                                   : make_triplet(t.at("domain").get<std::string>(),
                                                  profile.resolve_slot(t.at("slot").get<std::string>()),
                                                  t.at("value").get<std::string>());
    out.insert(std::move(triplet));
  }
  return out;
}

json triplets_to_json(const TripletSet& ts) {
  json arr = json::array();
  for (const auto& t : ts) arr.push_back(triplet_to_json(t));
  return arr;
}

TurnMarks marks_from_record(const json& j) {
  TurnMarks m;
  m.turn_index = j.at("turn_index").get<int>();
  auto read = [](const json& t) {
    return Triplet{t.at("domain").get<std::string>(), t.at("slot").get<std::string>(), t.at("value").get<std::string>()};
  };
  for (const auto& t : j.at("fn")) m.fn_triplets.insert(read(t));
  for (const auto& t : j.at("fp")) m.fp_triplets.insert(read(t));
  if (j.contains("domain_score") && !j.at("domain_score").is_null()) m.domain_score = j.at("domain_score").get<int>();
  if (j.contains("instruction_score") && !j.at("instruction_score").is_null()) {
    m.instruction_score = j.at("instruction_score").get<int>();
  }
  m.relevant = j.value("relevant", true);
  return m;
}

std::optional<int> score_field(const json& entry, const char* key, int turn_index) {
  if (!entry.contains(key) || entry.at(key).is_null()) return std::nullopt;
  const auto& v = entry.at(key);
  int score = v.is_boolean() ? (v.get<bool>() ? 1 : 0) : v.get<int>();
  if (score != 0 && score != 1) {
    throw Error(ErrorCode::invalid_argument, "turn " + std::to_string(turn_index) + ": " + key + " must be 0 or 1");
  }
  return score;
}

}  // namespace

std::string_view to_string(ReviewKind kind) {
  switch (kind) {
    case ReviewKind::annotation: return "annotation";
    case ReviewKind::domain_adherence: return "domain_adherence";
    case ReviewKind::instruction_adherence: return "instruction_adherence";
  }
  return "annotation";
}

std::string_view to_string(ReviewState state) { return state == ReviewState::pending ? "pending" : "submitted"; }

ReviewKind parse_review_kind(std::string_view text) {
  if (text == "annotation") return ReviewKind::annotation;
  if (text == "domain_adherence") return ReviewKind::domain_adherence;
  if (text == "instruction_adherence") return ReviewKind::instruction_adherence;
  throw Error(ErrorCode::invalid_argument, "unknown review kind '" + std::string(text) + "'");
}

json turn_marks_to_json(const TurnMarks& m) {
  return {{"turn_index", m.turn_index},
          {"fn", triplets_to_json(m.fn_triplets)},
          {"fp", triplets_to_json(m.fp_triplets)},
          {"domain_score", m.domain_score ? json(*m.domain_score) : json(nullptr)},
          {"instruction_score", m.instruction_score ? json(*m.instruction_score) : json(nullptr)},
          {"relevant", m.relevant}};
}

json review_task_to_json(const ReviewTask& t) {
  json turns = json::array();
  for (const auto& rt : t.turns) {
    turns.push_back(
        {{"turn_index", rt.turn_index}, {"speaker", rt.speaker}, {"suggested_relevant", rt.suggested_relevant}});
  }
  json marks = json::array();
  for (const auto& m : t.marks) marks.push_back(turn_marks_to_json(m));
  return {{"id", t.id},
          {"dialogue_id", t.dialogue_id},
          {"kind", to_string(t.kind)},
          {"reviewer_id", t.reviewer_id},
          {"state", to_string(t.state)},
          {"turns", turns},
          {"marks", marks}};
}

ReviewTask review_task_from_json(const json& j) {
  ReviewTask t;
  try {
    t.id = j.at("id").get<std::string>();
    t.dialogue_id = j.at("dialogue_id").get<std::string>();
    t.kind = parse_review_kind(j.at("kind").get<std::string>());
    t.reviewer_id = j.at("reviewer_id").get<std::string>();
    t.state = j.at("state").get<std::string>() == "submitted" ? ReviewState::submitted : ReviewState::pending;
    for (const auto& rt : j.at("turns")) {
      t.turns.push_back({rt.at("turn_index").get<int>(), rt.at("speaker").get<std::string>(),
                         rt.value("suggested_relevant", true)});
    }
    for (const auto& m : j.at("marks")) t.marks.push_back(marks_from_record(m));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed review record: ") + e.what());
  }
  return t;
}

bool mentions_kb(std::string_view text, const DomainKB& kb) {
  const std::string haystack = normalize_value(text);
  for (const auto& entity : kb.entities()) {
    for (const auto& [key, value] : entity) {
      if (!value) continue;
      const std::string needle = normalize_value(*value);
      if (needle.size() >= 3 && haystack.find(needle) != std::string::npos) return true;
    }
  }
  return false;
}

ReviewTask create_review(Workbench& wb, std::string_view dialogue_id, ReviewKind kind, std::string_view reviewer_id) {
  if (reviewer_id.empty()) throw Error(ErrorCode::invalid_argument, "reviewer_id is required");
  const Dialogue d = wb.load_dialogue(dialogue_id);
  const auto& profile = wb.profile(d.profile);

  ReviewTask task;
  task.dialogue_id = d.id;
  task.kind = kind;
  task.reviewer_id = std::string(reviewer_id);

  const std::string user_role = profile.user_side_role();
  const std::string system_role = profile.system_side_role();
  switch (kind) {
    case ReviewKind::annotation:
      if (!d.predicted_states) {
        throw Error(ErrorCode::missing_prerequisite, "dialogue " + d.id + " has no predicted annotations to review");
      }
      for (const auto& t : d.turns) {
        if (t.speaker == user_role) task.turns.push_back({t.index, t.speaker, true});
      }
      break;
    case ReviewKind::domain_adherence: {
      if (!d.kb_ref) {
        throw Error(ErrorCode::missing_prerequisite, "dialogue " + d.id + " does not come with a knowledge base");
      }
      if (!wb.resources().has_kb(*d.kb_ref)) {
        throw Error(ErrorCode::missing_prerequisite, "knowledge base '" + *d.kb_ref + "' is not available");
      }
      const auto& kb = wb.resources().kb(*d.kb_ref);
      for (const auto& t : d.turns) {
        if (t.speaker == system_role) task.turns.push_back({t.index, t.speaker, mentions_kb(t.text, kb)});
      }
      break;
    }
    case ReviewKind::instruction_adherence:
      if (d.mode != DialogueMode::one_shot || !d.instructions) {
        throw Error(ErrorCode::missing_prerequisite,
                    "dialogue " + d.id + " was not generated one-shot from user instructions");
      }
      for (const auto& t : d.turns) {
        if (t.speaker == user_role) task.turns.push_back({t.index, t.speaker, true});
      }
      break;
  }
  if (task.turns.empty()) {
    throw Error(ErrorCode::missing_prerequisite, "dialogue " + d.id + " has no turns to review for this kind");
  }

  const std::string prefix = review_prefix(d.id) + kind_tag(kind) + "-";
  int n = static_cast<int>(wb.store().list("reviews", prefix).size());
  for (;;) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%04d", ++n);
    task.id = prefix + suffix;
    try {
      task.version = wb.store().put("reviews", task.id, review_task_to_json(task), 0);
      return task;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::version_conflict) throw;
    }
  }
}

ReviewTask load_review(const Workbench& wb, std::string_view task_id) {
  auto rec = wb.store().find("reviews", task_id);
  if (!rec) throw Error(ErrorCode::not_found, "review task '" + std::string(task_id) + "' not found");
  auto task = review_task_from_json(rec->payload);
  task.version = rec->version;
  return task;
}

json review_outcome_to_json(const ReviewOutcome& o) {
  auto num = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"task", review_task_to_json(o.task)},
          {"version", o.task.version},
          {"sa", num(o.sa)},
          {"jga", num(o.jga)},
          {"adherence", num(o.adherence)}};
}

ReviewOutcome score_review(const Workbench& wb, const ReviewTask& task) {
  ReviewOutcome out;
  out.task = task;
  if (task.marks.empty()) return out;
  switch (task.kind) {
    case ReviewKind::annotation: {
      const Dialogue d = wb.load_dialogue(task.dialogue_id);
      const auto& schema = wb.profile(d.profile).require_schema();
      out.sa = slot_accuracy(task.marks, schema.all_pairs());
      out.jga = joint_goal_accuracy(task.marks);
      break;
    }
    case ReviewKind::domain_adherence:
      out.adherence = adherence_score(task.marks, AdherenceKind::domain);
      break;
    case ReviewKind::instruction_adherence:
      out.adherence = adherence_score(task.marks, AdherenceKind::instruction);
      break;
  }
  return out;
}

ReviewOutcome submit_marks(Workbench& wb, std::string_view task_id, const json& body,
                           std::optional<int> expected_version) {
  ReviewTask task = load_review(wb, task_id);
  if (task.state == ReviewState::submitted) {
    throw Error(ErrorCode::task_submitted, "review task " + task.id + " was already submitted");
  }
  if (expected_version && *expected_version != task.version) {
    throw Error(ErrorCode::version_conflict, "review task " + task.id + " is at version " +
                                                 std::to_string(task.version) + ", expected " +
                                                 std::to_string(*expected_version));
  }
  const json& entries = body.is_object() && body.contains("marks") ? body.at("marks") : body;
  if (!entries.is_array()) throw Error(ErrorCode::invalid_argument, "marks must be an array");

  const Dialogue d = wb.load_dialogue(task.dialogue_id);
  const auto& profile = wb.profile(d.profile);

  // Predicted state per user turn index, for "gold" entries.
  std::map<int, const BeliefState*> predicted;
  if (d.predicted_states) {
    const auto positions = d.user_turn_positions();
    for (std::size_t i = 0; i < positions.size() && i < d.predicted_states->size(); ++i) {
      predicted[d.turns[positions[i]].index] = &(*d.predicted_states)[i];
    }
  }

  std::map<int, const ReviewTurn*> expected;
  for (const auto& rt : task.turns) expected[rt.turn_index] = &rt;

  std::map<int, TurnMarks> marks;
  try {
    for (const auto& e : entries) {
      const int idx = e.at("turn_index").get<int>();
      auto it = expected.find(idx);
      if (it == expected.end()) {
        throw Error(ErrorCode::invalid_argument,
                    "turn " + std::to_string(idx) + " is not part of review task " + task.id);
      }
      if (marks.contains(idx)) throw Error(ErrorCode::invalid_argument, "turn " + std::to_string(idx) + " marked twice");
      TurnMarks m;
      m.turn_index = idx;
      m.relevant = e.value("relevant", it->second->suggested_relevant);
      switch (task.kind) {
        case ReviewKind::annotation:
          if (e.contains("gold")) {
            auto p = predicted.find(idx);
            if (p == predicted.end()) {
              throw Error(ErrorCode::invalid_argument, "turn " + std::to_string(idx) + " has no predicted state");
            }
            const auto gold = state_from_json(e.at("gold"), profile);
            auto diff = diff_belief(*p->second, gold);
            m.fn_triplets = std::move(diff.false_negatives);
            m.fp_triplets = std::move(diff.false_positives);
          } else if (e.contains("fn") || e.contains("fp")) {
            m.fn_triplets = triplets_from_json(e.value("fn", json::array()), profile);
            m.fp_triplets = triplets_from_json(e.value("fp", json::array()), profile);
          } else {
            continue;  // no verdict for this turn
          }
          break;
        case ReviewKind::domain_adherence:
          if (e.contains("instruction_score")) {
            throw Error(ErrorCode::invalid_argument, "instruction scores belong to user turns");
          }
          m.domain_score = score_field(e, "domain_score", idx);
          if (m.relevant && !m.domain_score) continue;
          break;
        case ReviewKind::instruction_adherence:
          if (e.contains("domain_score")) throw Error(ErrorCode::invalid_argument, "domain scores belong to system turns");
          m.instruction_score = score_field(e, "instruction_score", idx);
          if (m.relevant && !m.instruction_score) continue;
          break;
      }
      marks.emplace(idx, std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("malformed marks: ") + e.what());
  }

  std::string missing;
  for (const auto& rt : task.turns) {
    if (!marks.contains(rt.turn_index)) missing += (missing.empty() ? "" : ", ") + std::to_string(rt.turn_index);
  }
  if (!missing.empty()) throw Error(ErrorCode::incomplete_marks, "missing verdicts for turns " + missing);

  task.marks.clear();
  for (auto& [_, m] : marks) task.marks.push_back(std::move(m));
  // Validate before persisting so a rejected submission leaves the task pending.
  auto outcome = score_review(wb, task);
  task.state = ReviewState::submitted;
  task.version = wb.store().put("reviews", task.id, review_task_to_json(task), task.version);
  outcome.task = task;
  return outcome;
}

std::vector<ReviewTask> submitted_reviews(const Workbench& wb, std::string_view dialogue_id) {
  std::vector<ReviewTask> out;
  auto& store = wb.store();
  for (const auto& id : store.list("reviews", review_prefix(dialogue_id))) {
    auto task = load_review(wb, id);
    if (task.dialogue_id == dialogue_id && task.state == ReviewState::submitted) out.push_back(std::move(task));
  }
  return out;
}

}  // namespace dialab
