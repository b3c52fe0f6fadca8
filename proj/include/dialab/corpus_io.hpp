#pragma once

// Corpus ingestion and export.
//
// Corpus record format: one JSON object per line with fields
//   id, profile, mode, turns[{index, speaker, text, language}],
//   instructions?, kb_ref?, gold_states?, predicted_states?
// where each state is an array of {domain, slot, value} triplets.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/model.hpp"
#include "dialab/profile.hpp"

namespace dialab {

struct Corpus {
  std::string id;
  std::string profile;
  std::vector<Dialogue> dialogues;

  const Dialogue* find(std::string_view dialogue_id) const;
  bool operator==(const Corpus&) const = default;
};

struct IngestIssue {
  std::size_t line = 0;
  std::string code;
  std::string message;
};

struct IngestReport {
  Corpus corpus;
  std::vector<IngestIssue> issues;  // one per skipped record
};

nlohmann::json triplet_to_json(const Triplet& t);
nlohmann::json state_to_json(const BeliefState& s);
// Accepts {domain, slot, value} objects or [domain, slot, value] arrays.
// Applies slot aliases and checks the schema (SchemaViolation, DuplicatePair).
BeliefState state_from_json(const nlohmann::json& j, const DatasetProfile& profile);

nlohmann::json dialogue_to_json(const Dialogue& d);
// Throws FormatError, SchemaViolation or DuplicatePair.
Dialogue dialogue_from_json(const nlohmann::json& j, const DatasetProfile& profile);

// Line-delimited records. Malformed or invalid records are skipped and
// reported; they never abort the ingest.
IngestReport ingest_generic(std::string_view records, const DatasetProfile& profile, std::string corpus_id);

std::string export_corpus(const Corpus& c);

// MultiWOZ-style text layout:
//
//   # dialogue: MUL0001
//   User: I am looking for an expensive Italian restaurant.
//   metadata: {"restaurant": {"pricerange": "expensive", "food": "Italian"}}
//   System: There is an expensive Italian restaurant ...
//
// Turns alternate user/system and every user turn is followed by its
// (already cumulative) metadata snapshot. Without "# dialogue:" headers the
// document holds one dialogue named "<corpus_id>-1".
// Throws FormatError (with line) or SchemaViolation.
Corpus ingest_multiwoz(std::string_view document, const DatasetProfile& profile, std::string corpus_id);

// Ordered JSON keeps entity attribute order, which is the prompt order.
DomainKB kb_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json kb_to_json(const DomainKB& kb);
DomainKB load_kb(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace dialab
