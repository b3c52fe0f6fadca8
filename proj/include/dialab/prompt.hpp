#pragma once

// Generation and annotation prompt assembly from data-file templates.
//
// Template file format:
//
//   id: multiwoz_one_shot
//   language: en
//   mode: one_shot
//   --- task_instruction
//   Create a dialogue between a user and a system.
//   --- domain_knowledge
//   {{kb}}
//
// Header lines come first, then sections in rendering order. Placeholders
// are written {{name}}. A line that references an optional placeholder
// (schema_intents, example_dialogue, example_annotation) with no bound value
// is dropped from the output.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dialab/model.hpp"
#include "dialab/profile.hpp"

namespace dialab {

enum class TemplateMode { one_shot, interactive, annotation };
enum class SectionKind {
  task_instruction,
  context,
  domain_knowledge,
  user_instructions,
  system_simulation,
  format_instructions,
  dialogue_payload,
};

std::string_view to_string(TemplateMode mode);
std::string_view to_string(SectionKind kind);

struct TemplateSection {
  SectionKind kind;
  std::string text;
};

struct PromptTemplate {
  std::string id;
  std::string language;
  TemplateMode mode = TemplateMode::one_shot;
  std::vector<TemplateSection> sections;

  bool has_section(SectionKind kind) const;
};

// Throws InvalidTemplate on malformed headers, unknown section kinds or
// placeholders, or a section order that breaks the mode's content layout.
PromptTemplate parse_template(std::string_view text);

class TemplateStore {
 public:
  void add(PromptTemplate tmpl);
  // Loads every *.tmpl file in `dir`.
  void load_dir(const std::filesystem::path& dir);

  // Template "<set>_<mode>", e.g. "jilda_interactive". Throws NotFound.
  const PromptTemplate& find(std::string_view set, TemplateMode mode) const;
  bool has_set(std::string_view set) const;
  std::vector<const PromptTemplate*> all() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Checks the profile's template bundle exists and its language matches.
void check_profile_templates(const DatasetProfile& profile, const TemplateStore& store);

struct Prompt {
  std::string text;
  std::string template_id;
  std::map<std::string, std::string> bound_values;  // placeholder -> sha256 hex
};

// Throws EmptyKB.
std::string render_kb(const DomainKB& kb, KbStyle style);

Prompt build_generation_prompt(const TemplateStore& store, const DatasetProfile& profile, DialogueMode mode,
                               const DomainKB* kb, const std::optional<std::string>& user_instructions);

struct AnnotationExample {
  Dialogue dialogue;
  std::vector<BeliefState> annotations;  // one per user turn
};

Prompt build_annotation_prompt(const TemplateStore& store, const DatasetProfile& profile, const Dialogue& d,
                               const std::optional<AnnotationExample>& example = std::nullopt);

// Slot listing used in annotation prompts:
//   "job_description" (description of the job offered), "contract" (...)
std::string render_schema_slots(const DatasetProfile& profile);

}  // namespace dialab
