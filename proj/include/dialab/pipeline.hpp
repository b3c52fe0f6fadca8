#pragma once

// Batch commands. They compose through corpus ids in the store, so every
// step leaves an auditable record and can be re-run from there.
//
// Gold file (evaluate / stability):
//   {"default": [state, ...],              applies to every dialogue
//    "dialogues": {"<id>": [state, ...]},   per-dialogue override
//    "runs": [[state, ...], ...]}           per stability run, 1-based order
// where each state is a list of {domain, slot, value} triplets, one state
// per user turn.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/metrics.hpp"
#include "dialab/transcript_parser.hpp"
#include "dialab/workbench.hpp"

namespace dialab {

struct GenerateOptions {
  std::string profile;
  DialogueMode mode = DialogueMode::one_shot;
  std::optional<std::string> kb_ref;
  std::optional<std::string> instructions;
  int n = 1;
  std::optional<std::string> corpus_id;  // derived from the inputs if absent
  int first_sample = 0;                  // dialogue k uses sample first_sample + k - 1
};

struct DialogueWarnings {
  std::string dialogue_id;
  std::vector<ParseWarning> warnings;
};

struct GenerateResult {
  std::string corpus_id;
  std::vector<std::string> dialogue_ids;
  std::vector<DialogueWarnings> warnings;
};

// Throws UsageError (bad options, missing instructions), the gateway's errors,
// and NoTurnsFound / FormatError when a reply does not parse.
GenerateResult cmd_generate(Workbench& wb, const GenerateOptions& opts);
nlohmann::json generate_result_to_json(const GenerateResult& r);

struct AnnotationFailure {
  std::string dialogue_id;
  std::string code;
  std::string message;
};

struct AnnotateResult {
  std::string corpus_id;
  std::vector<std::string> annotated;
  std::vector<AnnotationFailure> failed;  // flagged, the rest still proceed
  std::vector<DialogueWarnings> warnings;
};

struct AnnotateOneResult {
  Dialogue dialogue;
  std::vector<ParseWarning> warnings;
};

// `sample` selects the fixture for repeated identical annotation prompts.
// Throws NoMetadataFound and the gateway's errors.
AnnotateOneResult annotate_dialogue(Workbench& wb, const std::string& dialogue_id, int sample = 0);
AnnotateResult cmd_annotate(Workbench& wb, const std::string& corpus_id);
nlohmann::json annotate_result_to_json(const AnnotateResult& r);
nlohmann::json parse_warning_to_json(const ParseWarning& w);

struct GoldFile {
  std::optional<std::vector<BeliefState>> fallback;
  std::map<std::string, std::vector<BeliefState>> dialogues;
  std::vector<std::vector<BeliefState>> runs;

  const std::vector<BeliefState>* for_dialogue(const std::string& id) const;
  // Run-specific gold first, then the dialogue lookup.
  const std::vector<BeliefState>* for_run(int run, const std::string& id) const;
};

GoldFile gold_from_json(const nlohmann::json& j, const DatasetProfile& profile);
GoldFile load_gold(const std::filesystem::path& path, const DatasetProfile& profile);

struct EvaluateOptions {
  SlotScope scope = SlotScope::schema;
  std::optional<GoldFile> gold;  // attached to dialogues lacking gold states
};

struct EvaluationReport {
  std::string corpus_id;
  SlotScope scope = SlotScope::schema;
  std::vector<DialogueScores> dialogues;
  std::vector<EvaluationRow> rows;
};

nlohmann::json evaluation_report_to_json(const EvaluationReport& r);

// Scores come from submitted review marks when present, else from gold vs
// predicted states. Throws NoMarks when no dialogue can be scored.
EvaluationReport cmd_evaluate(Workbench& wb, const std::string& corpus_id, const EvaluateOptions& opts = {});

struct StabilityOptions {
  std::string profile;
  std::optional<std::string> kb_ref;
  std::optional<std::string> instructions;
  int n = 10;
  GoldFile gold;
};

struct StabilityResult {
  std::string corpus_id;
  StabilityReport report;
};

nlohmann::json stability_result_to_json(const StabilityResult& r);

// n one-shot generate + annotate + evaluate rounds of the very same prompt.
// Throws UsageError for n < 1.
StabilityResult cmd_stability(Workbench& wb, const StabilityOptions& opts);

}  // namespace dialab
