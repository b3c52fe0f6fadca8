#pragma once

// Expert review tasks: annotation review (false negatives / false positives
// per user turn), domain adherence (hallucination verdicts on system turns)
// and instruction adherence (conflict verdicts on user turns).
//
// Marks submission body, one entry per task turn:
//   {"turn_index": 3,
//    "fn": [{domain, slot, value}], "fp": [...]     annotation, or
//    "gold": [{domain, slot, value}, ...]            annotation, FN/FP derived
//    "relevant": true, "domain_score": 0|1           domain_adherence
//    "relevant": true, "instruction_score": 0|1      instruction_adherence}

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/metrics.hpp"
#include "dialab/workbench.hpp"

namespace dialab {

enum class ReviewKind { annotation, domain_adherence, instruction_adherence };
enum class ReviewState { pending, submitted };

std::string_view to_string(ReviewKind kind);
std::string_view to_string(ReviewState state);
// Throws InvalidArgument.
ReviewKind parse_review_kind(std::string_view text);

struct ReviewTurn {
  int turn_index = 0;
  std::string speaker;
  bool suggested_relevant = true;
};

struct ReviewTask {
  std::string id;
  std::string dialogue_id;
  ReviewKind kind = ReviewKind::annotation;
  std::string reviewer_id;
  ReviewState state = ReviewState::pending;
  std::vector<ReviewTurn> turns;
  std::vector<TurnMarks> marks;  // filled on submission
  int version = 0;               // store version, not serialized
};

nlohmann::json turn_marks_to_json(const TurnMarks& m);
nlohmann::json review_task_to_json(const ReviewTask& t);
ReviewTask review_task_from_json(const nlohmann::json& j);

// True when the text mentions any KB attribute value of at least three
// characters (case-insensitive).
bool mentions_kb(std::string_view text, const DomainKB& kb);

// Throws NotFound, MissingPrerequisite.
ReviewTask create_review(Workbench& wb, std::string_view dialogue_id, ReviewKind kind, std::string_view reviewer_id);
// Throws NotFound.
ReviewTask load_review(const Workbench& wb, std::string_view task_id);

struct ReviewOutcome {
  ReviewTask task;
  std::optional<double> sa;
  std::optional<double> jga;
  std::optional<double> adherence;
};

nlohmann::json review_outcome_to_json(const ReviewOutcome& o);

// Recomputes the metric from `task.marks`.
ReviewOutcome score_review(const Workbench& wb, const ReviewTask& task);

// Throws TaskSubmitted, IncompleteMarks, InvalidArgument, PairOutsideS,
// VersionConflict.
ReviewOutcome submit_marks(Workbench& wb, std::string_view task_id, const nlohmann::json& marks,
                           std::optional<int> expected_version = std::nullopt);

// Submitted tasks of a dialogue, oldest first.
std::vector<ReviewTask> submitted_reviews(const Workbench& wb, std::string_view dialogue_id);

}  // namespace dialab
