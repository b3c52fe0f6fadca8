#pragma once

// Lenient parsing of LLM output into dialogues and belief-state annotations.
// Parsing is total: malformed input produces warnings or a fatal error in the
// report, never an exception.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialab/error.hpp"
#include "dialab/model.hpp"
#include "dialab/profile.hpp"

namespace dialab {

struct ParseWarning {
  std::size_t line = 0;  // 1-based line in the parsed text
  std::string code;
  std::string snippet;
};

template <class T>
struct ParseReport {
  std::optional<T> value;
  std::vector<ParseWarning> warnings;
  std::optional<Error> fatal;

  bool ok() const { return !fatal.has_value(); }
  std::size_t count(std::string_view code) const {
    std::size_t n = 0;
    for (const auto& w : warnings) n += (w.code == code);
    return n;
  }
};

// Recognizes numbered ("1. User: ...") and unnumbered ("User: ...") speaker
// lines. Unlabelled lines continue the previous turn. The result carries the
// profile name and language; id and mode are left for the caller to set.
ParseReport<Dialogue> parse_dialogue(std::string_view text, const DatasetProfile& profile);

struct AnnotatedTurn {
  int turn_index = 0;
  BeliefState state;

  bool operator==(const AnnotatedTurn&) const = default;
};

// Extracts every "metadata: {...}" block in order. Blocks are aligned to the
// user turns of `dialogue` when given (extra blocks dropped, missing ones
// carried forward); otherwise turn_index is the 1-based block ordinal.
ParseReport<std::vector<AnnotatedTurn>> parse_annotations(std::string_view text,
                                                          const DatasetProfile& profile,
                                                          const Dialogue* dialogue = nullptr);

// One raw key/value pulled from a metadata block before schema resolution.
struct RawMetadataItem {
  std::optional<std::string> domain;
  std::string slot;
  std::string value;
};

struct RawMetadataBlock {
  std::size_t line = 0;
  std::vector<RawMetadataItem> items;
};

// Low-level block scanner shared by annotation parsing and corpus ingestion.
// Repairs (quotes, braces) are appended to `warnings`.
std::vector<RawMetadataBlock> scan_metadata_blocks(std::string_view text,
                                                   std::vector<ParseWarning>& warnings);

// Resolves a raw item to a schema triplet: applies slot aliases, splits
// "domain-slot" keys, falls back to the profile's default domain or the
// unique domain owning the slot. Returns nullopt when it cannot be resolved.
std::optional<Triplet> resolve_metadata_item(const RawMetadataItem& item, const DatasetProfile& profile);

// Numbered "N. Speaker: text" lines; continuation lines are indented.
std::string serialize_dialogue(const Dialogue& d);

// "metadata: {...}" for one state, nested by domain unless the profile has a
// default domain.
std::string format_metadata(const BeliefState& state, const DatasetProfile& profile);

}  // namespace dialab
