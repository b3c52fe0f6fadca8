#include "dialab/error.hpp"

namespace dialab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::duplicate_pair: return "DuplicatePair";
    case ErrorCode::format_error: return "FormatError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::unsupported_language: return "UnsupportedLanguage";
    case ErrorCode::missing_instructions: return "MissingInstructions";
    case ErrorCode::missing_kb: return "MissingKB";
    case ErrorCode::unresolved_placeholder: return "UnresolvedPlaceholder";
    case ErrorCode::invalid_template: return "InvalidTemplate";
    case ErrorCode::empty_dialogue: return "EmptyDialogue";
    case ErrorCode::empty_kb: return "EmptyKB";
    case ErrorCode::missing_credential: return "MissingCredential";
    case ErrorCode::unknown_backend: return "UnknownBackend";
    case ErrorCode::store_not_writable: return "StoreNotWritable";
    case ErrorCode::fixture_miss: return "FixtureMiss";
    case ErrorCode::fixture_conflict: return "FixtureConflict";
    case ErrorCode::transport_error: return "TransportError";
    case ErrorCode::context_overflow: return "ContextOverflow";
    case ErrorCode::no_turns_found: return "NoTurnsFound";
    case ErrorCode::no_metadata_found: return "NoMetadataFound";
    case ErrorCode::empty_s: return "EmptyS";
    case ErrorCode::pair_outside_s: return "PairOutsideS";
    case ErrorCode::empty_marks: return "EmptyMarks";
    case ErrorCode::no_relevant_turns: return "NoRelevantTurns";
    case ErrorCode::unknown_label: return "UnknownLabel";
    case ErrorCode::empty_ratings: return "EmptyRatings";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::empty_runs: return "EmptyRuns";
    case ErrorCode::version_conflict: return "VersionConflict";
    case ErrorCode::not_found: return "NotFound";
    case ErrorCode::unknown_profile: return "UnknownProfile";
    case ErrorCode::session_finished: return "SessionFinished";
    case ErrorCode::too_short: return "TooShort";
    case ErrorCode::missing_prerequisite: return "MissingPrerequisite";
    case ErrorCode::incomplete_marks: return "IncompleteMarks";
    case ErrorCode::task_submitted: return "TaskSubmitted";
    case ErrorCode::no_marks: return "NoMarks";
    case ErrorCode::usage_error: return "UsageError";
  }
  return "Unknown";
}

}  // namespace dialab
