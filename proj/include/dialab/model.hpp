#pragma once

// Core dialogue types: triplets, cumulative belief states, annotation
// schemas, knowledge bases, and the set algebra the metrics are built on.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dialab {

inline constexpr std::string_view kUserRole = "user";
inline constexpr std::string_view kSystemRole = "system";
inline constexpr std::string_view kUnknownRole = "unknown";

// Trim, ASCII case-fold, collapse internal whitespace runs to one space.
std::string normalize_value(std::string_view raw);
// Trimmed, lowercased token (domain / slot / role names).
std::string normalize_token(std::string_view raw);

struct SlotKey {
  std::string domain;
  std::string slot;

  auto operator<=>(const SlotKey&) const = default;
};

struct Triplet {
  std::string domain;
  std::string slot;
  std::string value;

  SlotKey key() const { return {domain, slot}; }
  auto operator<=>(const Triplet&) const = default;
};

// Normalizes all three fields. Throws InvalidArgument if any is empty after
// normalization.
Triplet make_triplet(std::string_view domain, std::string_view slot, std::string_view value);

using TripletSet = std::set<Triplet>;
using PairSet = std::set<SlotKey>;

PairSet project_pairs(const TripletSet& triplets);

struct SlotSpec {
  std::string name;
  std::string description;
};

class AnnotationSchema {
 public:
  AnnotationSchema() = default;

  // Validates: domains non-empty and unique, every domain has at least one
  // slot, no slot repeated within a domain, every description non-empty.
  AnnotationSchema(std::vector<std::string> domains,
                   std::map<std::string, std::vector<SlotSpec>> slots,
                   std::vector<std::string> intents = {});

  const std::vector<std::string>& domains() const { return domains_; }
  const std::vector<SlotSpec>& slots(const std::string& domain) const;
  const std::vector<std::string>& intents() const { return intents_; }

  bool has_domain(std::string_view domain) const;
  bool has_slot(std::string_view domain, std::string_view slot) const;
  std::optional<std::string> description(std::string_view domain, std::string_view slot) const;
  // Domains whose slot list contains `slot`, in schema order.
  std::vector<std::string> domains_owning(std::string_view slot) const;
  PairSet all_pairs() const;

  // Throws SchemaViolation when the triplet's (domain, slot) is not declared.
  void check(const Triplet& t) const;

 private:
  std::vector<std::string> domains_;
  std::map<std::string, std::vector<SlotSpec>, std::less<>> slots_;
  std::vector<std::string> intents_;
};

// Set of triplets with at most one value per (domain, slot).
class BeliefState {
 public:
  BeliefState() = default;

  // Throws DuplicatePair if two triplets share a (domain, slot).
  static BeliefState from_triplets(std::span<const Triplet> triplets);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::optional<std::string> value_of(const SlotKey& key) const;
  TripletSet triplets() const;
  PairSet pairs() const;

  bool operator==(const BeliefState&) const = default;

 private:
  friend BeliefState accumulate_belief(const AnnotationSchema&, const BeliefState&,
                                       std::span<const Triplet>);
  std::map<SlotKey, std::string> entries_;
};

// Overwrite semantics: pairs present in `update` take the update's value.
// Throws SchemaViolation or DuplicatePair.
BeliefState accumulate_belief(const AnnotationSchema& schema, const BeliefState& prev,
                              std::span<const Triplet> update);

struct BeliefDiff {
  TripletSet false_negatives;  // gold \ predicted
  TripletSet false_positives;  // predicted \ gold

  bool clean() const { return false_negatives.empty() && false_positives.empty(); }
};

BeliefDiff diff_belief(const BeliefState& predicted, const BeliefState& gold);

// Triplets in `next` that are new or changed relative to `prev`.
std::vector<Triplet> belief_delta(const BeliefState& prev, const BeliefState& next);

enum class DialogueMode { reference, one_shot, interactive };

std::string_view to_string(DialogueMode mode);
// Throws InvalidArgument for anything outside the three modes.
DialogueMode parse_mode(std::string_view text);

struct Turn {
  int index = 0;  // 1-based
  std::string speaker;
  std::string text;
  std::string language;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::string profile;
  DialogueMode mode = DialogueMode::reference;
  std::vector<Turn> turns;
  std::optional<std::string> instructions;
  std::optional<std::string> kb_ref;
  // One entry per user turn when present.
  std::optional<std::vector<BeliefState>> gold_states;
  std::optional<std::vector<BeliefState>> predicted_states;

  // Positions (into `turns`) of user turns, in order.
  std::vector<std::size_t> user_turn_positions() const;
  std::size_t user_turn_count() const { return user_turn_positions().size(); }

  bool operator==(const Dialogue&) const = default;
};

struct Violation {
  std::string code;  // EmptyText, NonMonotoneIndex, GoldLengthMismatch, ...
  int turn_index = 0;  // 0 for dialogue-level breaches
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_dialogue(const Dialogue& d);

// Knowledge base for one domain. Entity attributes keep their source order,
// which is the order they are rendered into prompts.
class DomainKB {
 public:
  using Entity = std::vector<std::pair<std::string, std::optional<std::string>>>;

  DomainKB() = default;
  // Throws InvalidArgument if entities disagree on their attribute key set.
  DomainKB(std::string domain, std::vector<Entity> entities);

  const std::string& domain() const { return domain_; }
  const std::vector<Entity>& entities() const { return entities_; }
  bool empty() const { return entities_.empty(); }

 private:
  std::string domain_;
  std::vector<Entity> entities_;
};

}  // namespace dialab
