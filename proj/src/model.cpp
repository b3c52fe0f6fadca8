#include "dialab/model.hpp"

#include <algorithm>
#include <cctype>

#include "dialab/error.hpp"

namespace dialab {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string normalize_value(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(fold(c));
  }
  return out;
}

std::string normalize_token(std::string_view raw) {
  while (!raw.empty() && is_space(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);
  std::string out(raw);
  std::transform(out.begin(), out.end(), out.begin(), fold);
  return out;
}

Triplet make_triplet(std::string_view domain, std::string_view slot, std::string_view value) {
  Triplet t{normalize_token(domain), normalize_token(slot), normalize_value(value)};
  if (t.domain.empty() || t.slot.empty() || t.value.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "triplet fields must be non-empty: (" + t.domain + ", " + t.slot + ", " + t.value + ")");
  }
  return t;
}

PairSet project_pairs(const TripletSet& triplets) {
  PairSet out;
  for (const auto& t : triplets) out.insert(t.key());
  return out;
}

// ---------------------------------------------------------------------------

AnnotationSchema::AnnotationSchema(std::vector<std::string> domains,
                                   std::map<std::string, std::vector<SlotSpec>> slots,
                                   std::vector<std::string> intents)
    : intents_(std::move(intents)) {
  if (domains.empty()) throw Error(ErrorCode::invalid_argument, "schema declares no domains");
  for (auto& d : domains) {
    std::string token = normalize_token(d);
    if (token.empty()) throw Error(ErrorCode::invalid_argument, "empty domain token");
    if (slots_.contains(token)) throw Error(ErrorCode::invalid_argument, "duplicate domain " + token);
    auto it = slots.find(d);
    if (it == slots.end() || it->second.empty()) {
      throw Error(ErrorCode::invalid_argument, "domain " + token + " has no slots");
    }
    std::vector<SlotSpec> specs;
    std::set<std::string> seen;
    for (const auto& spec : it->second) {
      std::string name = normalize_token(spec.name);
      if (name.empty()) throw Error(ErrorCode::invalid_argument, "empty slot in domain " + token);
      if (!seen.insert(name).second) {
        throw Error(ErrorCode::invalid_argument, "slot " + name + " repeated in domain " + token);
      }
      if (normalize_value(spec.description).empty()) {
        throw Error(ErrorCode::invalid_argument, "slot " + token + "." + name + " has no description");
      }
      specs.push_back({name, spec.description});
    }
    domains_.push_back(token);
    slots_.emplace(token, std::move(specs));
  }
}

const std::vector<SlotSpec>& AnnotationSchema::slots(const std::string& domain) const {
  static const std::vector<SlotSpec> none;
  auto it = slots_.find(domain);
  return it == slots_.end() ? none : it->second;
}

bool AnnotationSchema::has_domain(std::string_view domain) const {
  return slots_.find(domain) != slots_.end();
}

bool AnnotationSchema::has_slot(std::string_view domain, std::string_view slot) const {
  return description(domain, slot).has_value();
}

std::optional<std::string> AnnotationSchema::description(std::string_view domain,
                                                         std::string_view slot) const {
  auto it = slots_.find(domain);
  if (it == slots_.end()) return std::nullopt;
  for (const auto& spec : it->second) {
    if (spec.name == slot) return spec.description;
  }
  return std::nullopt;
}

std::vector<std::string> AnnotationSchema::domains_owning(std::string_view slot) const {
  std::vector<std::string> out;
  for (const auto& d : domains_) {
    if (has_slot(d, slot)) out.push_back(d);
  }
  return out;
}

PairSet AnnotationSchema::all_pairs() const {
  PairSet out;
  for (const auto& [domain, specs] : slots_) {
    for (const auto& spec : specs) out.insert({domain, spec.name});
  }
  return out;
}

void AnnotationSchema::check(const Triplet& t) const {
  if (!has_domain(t.domain)) {
    throw Error(ErrorCode::schema_violation, "unknown domain '" + t.domain + "'");
  }
  if (!has_slot(t.domain, t.slot)) {
    throw Error(ErrorCode::schema_violation, "unknown slot '" + t.slot + "' in domain '" + t.domain + "'");
  }
}

// ---------------------------------------------------------------------------

BeliefState BeliefState::from_triplets(std::span<const Triplet> triplets) {
  BeliefState state;
  for (const auto& t : triplets) {
    if (!state.entries_.emplace(t.key(), t.value).second) {
      throw Error(ErrorCode::duplicate_pair, "duplicate (" + t.domain + ", " + t.slot + ")");
    }
  }
  return state;
}

std::optional<std::string> BeliefState::value_of(const SlotKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

TripletSet BeliefState::triplets() const {
  TripletSet out;
  for (const auto& [key, value] : entries_) out.insert({key.domain, key.slot, value});
  return out;
}

PairSet BeliefState::pairs() const {
  PairSet out;
  for (const auto& entry : entries_) out.insert(entry.first);
  return out;
}

BeliefState accumulate_belief(const AnnotationSchema& schema, const BeliefState& prev,
                              std::span<const Triplet> update) {
  PairSet seen;
  for (const auto& t : update) {
    schema.check(t);
    if (!seen.insert(t.key()).second) {
      throw Error(ErrorCode::duplicate_pair, "update repeats (" + t.domain + ", " + t.slot + ")");
    }
  }
  BeliefState next = prev;
  for (const auto& t : update) next.entries_[t.key()] = t.value;
  return next;
}

BeliefDiff diff_belief(const BeliefState& predicted, const BeliefState& gold) {
  const TripletSet p = predicted.triplets();
  const TripletSet g = gold.triplets();
  BeliefDiff diff;
  std::set_difference(g.begin(), g.end(), p.begin(), p.end(),
                      std::inserter(diff.false_negatives, diff.false_negatives.end()));
  std::set_difference(p.begin(), p.end(), g.begin(), g.end(),
                      std::inserter(diff.false_positives, diff.false_positives.end()));
  return diff;
}

std::vector<Triplet> belief_delta(const BeliefState& prev, const BeliefState& next) {
  std::vector<Triplet> out;
  for (const auto& t : next.triplets()) {
    if (prev.value_of(t.key()) != t.value) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DialogueMode mode) {
  switch (mode) {
    case DialogueMode::reference: return "reference";
    case DialogueMode::one_shot: return "one_shot";
    case DialogueMode::interactive: return "interactive";
  }
  return "reference";
}

DialogueMode parse_mode(std::string_view text) {
  if (text == "reference") return DialogueMode::reference;
  if (text == "one_shot") return DialogueMode::one_shot;
  if (text == "interactive") return DialogueMode::interactive;
  throw Error(ErrorCode::invalid_argument, "unknown dialogue mode '" + std::string(text) + "'");
}

std::vector<std::size_t> Dialogue::user_turn_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].speaker == kUserRole) out.push_back(i);
  }
  return out;
}

std::vector<Violation> validate_dialogue(const Dialogue& d) {
  std::vector<Violation> out;
  if (d.id.empty()) out.push_back({"EmptyId", 0, "dialogue id is empty"});
  int last_index = 0;
  for (const auto& turn : d.turns) {
    if (turn.index <= last_index) {
      out.push_back({"NonMonotoneIndex", turn.index,
                     "turn index " + std::to_string(turn.index) + " does not follow " +
                         std::to_string(last_index)});
    }
    last_index = std::max(last_index, turn.index);
    if (normalize_value(turn.text).empty()) {
      out.push_back({"EmptyText", turn.index, "turn text is empty"});
    }
    if (turn.speaker.empty()) out.push_back({"EmptySpeaker", turn.index, "turn has no speaker"});
  }
  const std::size_t users = d.user_turn_count();
  if (d.gold_states && d.gold_states->size() != users) {
    out.push_back({"GoldLengthMismatch", 0,
                   std::to_string(d.gold_states->size()) + " gold states for " +
                       std::to_string(users) + " user turns"});
  }
  if (d.predicted_states && d.predicted_states->size() != users) {
    out.push_back({"PredictedLengthMismatch", 0,
                   std::to_string(d.predicted_states->size()) + " predicted states for " +
                       std::to_string(users) + " user turns"});
  }
  return out;
}

// ---------------------------------------------------------------------------

DomainKB::DomainKB(std::string domain, std::vector<Entity> entities)
    : domain_(normalize_token(domain)), entities_(std::move(entities)) {
  if (entities_.empty()) return;
  auto keys_of = [](const Entity& e) {
    std::set<std::string> keys;
    for (const auto& [k, v] : e) keys.insert(k);
    return keys;
  };
  const auto first = keys_of(entities_.front());
  for (std::size_t i = 1; i < entities_.size(); ++i) {
    if (keys_of(entities_[i]) != first) {
      throw Error(ErrorCode::invalid_argument,
                  "KB entity " + std::to_string(i + 1) + " has a different attribute key set");
    }
  }
}

}  // namespace dialab
