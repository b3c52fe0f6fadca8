#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dialab {

enum class ErrorCode {
  invalid_argument,
  schema_violation,
  duplicate_pair,
  format_error,
  parse_error,
  unsupported_language,
  missing_instructions,
  missing_kb,
  unresolved_placeholder,
  invalid_template,
  empty_dialogue,
  empty_kb,
  missing_credential,
  unknown_backend,
  store_not_writable,
  fixture_miss,
  fixture_conflict,
  transport_error,
  context_overflow,
  no_turns_found,
  no_metadata_found,
  empty_s,
  pair_outside_s,
  empty_marks,
  no_relevant_turns,
  unknown_label,
  empty_ratings,
  empty_group,
  empty_runs,
  version_conflict,
  not_found,
  unknown_profile,
  session_finished,
  too_short,
  missing_prerequisite,
  incomplete_marks,
  task_submitted,
  no_marks,
  usage_error,
};

// Stable machine-readable name, e.g. "SchemaViolation".
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dialab
