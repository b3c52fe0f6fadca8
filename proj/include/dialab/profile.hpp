#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/model.hpp"

namespace dialab {

enum class KbStyle { attribute_lines, numbered_offers };

std::string_view to_string(KbStyle style);
KbStyle parse_kb_style(std::string_view text);

// Everything dataset-specific: role vocabulary, speaker label aliases,
// annotation schema, prompt template bundle, slot aliases.
struct DatasetProfile {
  std::string name;
  std::string language;
  // First entry is the user-side role (played by the human in interactive
  // collection), second the system-side role played by the model.
  std::vector<std::string> role_vocabulary;
  // normalized speaker label -> role token ("navigator" -> "system")
  std::map<std::string, std::string> speaker_aliases;
  std::optional<AnnotationSchema> schema;
  std::string template_set;
  // alias slot token -> canonical slot token ("cuisine" -> "food")
  std::map<std::string, std::string> slot_aliases;
  // Domain used for flat "slot: value" annotations.
  std::optional<std::string> default_domain;
  KbStyle kb_style = KbStyle::attribute_lines;
  // Interactive sessions: the model's reply to the priming prompt is the
  // first dialogue turn rather than an acknowledgement.
  bool system_opens = false;

  const std::string& user_side_role() const { return role_vocabulary.at(0); }
  const std::string& system_side_role() const { return role_vocabulary.at(1); }

  // Maps a raw speaker label to a role token, or nullopt when unknown.
  std::optional<std::string> resolve_role(std::string_view label) const;
  std::string resolve_slot(std::string_view slot) const;
  // "user" -> "User"
  static std::string display_label(std::string_view role);

  const AnnotationSchema& require_schema() const;
};

DatasetProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const DatasetProfile& p);

class ProfileRegistry {
 public:
  void add(DatasetProfile profile);
  // Loads every *.json file in `dir`.
  void load_dir(const std::filesystem::path& dir);

  // Throws UnknownProfile.
  const DatasetProfile& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, DatasetProfile, std::less<>> profiles_;
};

}  // namespace dialab
