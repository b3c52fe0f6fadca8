#pragma once

// Evaluation metrics: slot accuracy, joint goal accuracy, adherence scores,
// Likert aggregation, the Mann-Whitney significance test and stability
// summaries over repeated runs.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/model.hpp"

namespace dialab {

// Reviewer verdicts for one turn. The adherence scores hold the per-turn
// score: 1 when the turn is faithful, 0 when it hallucinates (domain) or
// conflicts with the user instructions (instruction).
struct TurnMarks {
  int turn_index = 0;
  TripletSet fn_triplets;
  TripletSet fp_triplets;
  std::optional<int> domain_score;       // system turns referencing the KB
  std::optional<int> instruction_score;  // user turns of one-shot dialogues
  bool relevant = true;

  bool clean() const { return fn_triplets.empty() && fp_triplets.empty(); }
  bool operator==(const TurnMarks&) const = default;
};

// Per-turn marks from a gold and a predicted state sequence of equal length.
// `turn_indices` gives the dialogue turn index of each state.
std::vector<TurnMarks> marks_from_states(std::span<const BeliefState> predicted,
                                         std::span<const BeliefState> gold,
                                         std::span<const int> turn_indices);

double turn_slot_accuracy(const TurnMarks& m, const PairSet& s);
// (|S| - |P u Q|) / |S|, the union form of the same quantity.
double turn_slot_accuracy_union(const TurnMarks& m, const PairSet& s);

// Mean of per-turn SA. Throws EmptyS, EmptyMarks, PairOutsideS, DuplicatePair.
double slot_accuracy(std::span<const TurnMarks> marks, const PairSet& s);
// Fraction of clean turns. Throws EmptyMarks.
double joint_goal_accuracy(std::span<const TurnMarks> marks);

enum class AdherenceKind { domain, instruction };

std::string_view to_string(AdherenceKind kind);

// Mean score over relevant turns carrying a score of the given kind.
// Throws NoRelevantTurns, InvalidArgument for scores outside {0, 1}.
double adherence_score(std::span<const TurnMarks> marks, AdherenceKind kind);

// Which (domain, slot) pairs make up S.
enum class SlotScope { schema, corpus_gold, dialogue_gold };

std::string_view to_string(SlotScope scope);
SlotScope parse_slot_scope(std::string_view text);

// schema: every pair the schema declares. corpus_gold / dialogue_gold: pairs
// occurring in any gold or predicted state of the corpus / the dialogue.
PairSet slot_universe(SlotScope scope, const AnnotationSchema& schema, std::span<const Dialogue> corpus,
                      const Dialogue& dialogue);

// English and Italian verbal labels, case-insensitive. Throws UnknownLabel.
int likert_to_numeric(std::string_view label);

struct QualityRating {
  std::string dialogue_id;
  int criterion = 0;  // 1..6
  std::string label;
  std::string rater_id;
};

// Throws InvalidArgument (criterion) or UnknownLabel.
void validate_rating(const QualityRating& r);

struct CellKey {
  std::string dataset;
  std::string version;

  auto operator<=>(const CellKey&) const = default;
};

struct CellStat {
  double mean = 0.0;
  double sum = 0.0;
  std::size_t count = 0;
};

struct Marginal {
  double macro = 0.0;  // mean of cell means
  double micro = 0.0;  // mean over every rating
  std::size_t cells = 0;
  std::size_t count = 0;
};

struct QualityReport {
  std::map<CellKey, CellStat> cells;
  std::map<std::string, Marginal> rows;     // per dataset
  std::map<std::string, Marginal> columns;  // per version
  Marginal grand;
};

// Throws EmptyRatings, InvalidArgument when a rating's dialogue has no cell.
QualityReport aggregate_quality(std::span<const QualityRating> ratings,
                                const std::map<std::string, CellKey>& grouping);

// Marginals from already-computed cells; micro averages weight by count.
QualityReport summarize_cells(std::map<CellKey, CellStat> cells);
// Convenience for published tables where only the cell means are known.
QualityReport marginals_from_cells(const std::map<CellKey, double>& cell_means);

nlohmann::json quality_report_to_json(const QualityReport& r);

struct SignificanceResult {
  double u = 0.0;  // U statistic of group A
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
  bool exact = false;
};

// Two-sided Mann-Whitney U. Exact conditional distribution (ties included)
// when both groups have at most 20 items, otherwise the tie-corrected normal
// approximation with continuity correction. Throws EmptyGroup.
SignificanceResult significance_test(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactMannWhitneyLimit = 20;

struct StabilityRun {
  int run_index = 0;
  double sa = 0.0;
  double jga = 0.0;
  bool perfect = false;
};

StabilityRun make_stability_run(int run_index, double sa, double jga);

struct StabilityReport {
  double mean_sa = 0.0;
  double mean_jga = 0.0;
  double std_sa = 0.0;  // population standard deviation
  double std_jga = 0.0;
  int perfect_count = 0;
  std::vector<StabilityRun> runs;
};

// Throws EmptyRuns, InvalidArgument if a run's perfect flag disagrees with jga.
StabilityReport stability_report(std::span<const StabilityRun> runs);

nlohmann::json stability_report_to_json(const StabilityReport& r);

// Per-dialogue scores; absent values mean the metric does not apply.
struct DialogueScores {
  std::string dialogue_id;
  std::string dataset;
  DialogueMode mode = DialogueMode::reference;
  std::optional<double> sa;
  std::optional<double> jga;
  std::optional<double> domain_adherence;
  std::optional<double> instruction_adherence;
};

struct EvaluationRow {
  std::string dataset;
  DialogueMode mode = DialogueMode::reference;
  std::size_t dialogues = 0;
  std::optional<double> sa;
  std::optional<double> jga;
  std::optional<double> domain_adherence;
  std::optional<double> instruction_adherence;
};

// One row per (dataset, mode), each metric averaged over the dialogues that
// have it. Throws NoMarks when no dialogue carries any score.
std::vector<EvaluationRow> evaluation_table(std::span<const DialogueScores> scores);

nlohmann::json dialogue_scores_to_json(const DialogueScores& s);
nlohmann::json evaluation_table_to_json(std::span<const EvaluationRow> rows);

}  // namespace dialab
