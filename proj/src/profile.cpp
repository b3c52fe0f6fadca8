#include "dialab/profile.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "dialab/error.hpp"

namespace dialab {

std::string_view to_string(KbStyle style) {
  return style == KbStyle::numbered_offers ? "numbered_offers" : "attribute_lines";
}

KbStyle parse_kb_style(std::string_view text) {
  if (text == "attribute_lines") return KbStyle::attribute_lines;
  if (text == "numbered_offers") return KbStyle::numbered_offers;
  throw Error(ErrorCode::invalid_argument, "unknown kb style '" + std::string(text) + "'");
}

std::optional<std::string> DatasetProfile::resolve_role(std::string_view label) const {
  const std::string token = normalize_value(label);
  if (token.empty()) return std::nullopt;
  if (std::find(role_vocabulary.begin(), role_vocabulary.end(), token) != role_vocabulary.end()) {
    return token;
  }
  if (auto it = speaker_aliases.find(token); it != speaker_aliases.end()) return it->second;
  return std::nullopt;
}

std::string DatasetProfile::resolve_slot(std::string_view slot) const {
  std::string token = normalize_token(slot);
  if (auto it = slot_aliases.find(token); it != slot_aliases.end()) return it->second;
  return token;
}

std::string DatasetProfile::display_label(std::string_view role) {
  std::string out(role);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

const AnnotationSchema& DatasetProfile::require_schema() const {
  if (!schema) throw Error(ErrorCode::invalid_argument, "profile " + name + " has no annotation schema");
  return *schema;
}

DatasetProfile profile_from_json(const nlohmann::json& j) {
  DatasetProfile p;
  try {
    p.name = normalize_token(j.at("name").get<std::string>());
    p.language = j.at("language").get<std::string>();
    for (const auto& r : j.at("roles")) p.role_vocabulary.push_back(normalize_token(r.get<std::string>()));
    if (j.contains("speaker_aliases")) {
      for (const auto& [label, role] : j.at("speaker_aliases").items()) {
        p.speaker_aliases[normalize_value(label)] = normalize_token(role.get<std::string>());
      }
    }
    p.template_set = j.at("template_set").get<std::string>();
    if (j.contains("slot_aliases")) {
      for (const auto& [alias, slot] : j.at("slot_aliases").items()) {
        p.slot_aliases[normalize_token(alias)] = normalize_token(slot.get<std::string>());
      }
    }
    if (j.contains("default_domain") && !j.at("default_domain").is_null()) {
      p.default_domain = normalize_token(j.at("default_domain").get<std::string>());
    }
    if (j.contains("kb_style")) p.kb_style = parse_kb_style(j.at("kb_style").get<std::string>());
    p.system_opens = j.value("system_opens", false);
    if (j.contains("schema") && !j.at("schema").is_null()) {
      const auto& s = j.at("schema");
      std::vector<std::string> domains;
      std::map<std::string, std::vector<SlotSpec>> slots;
      for (const auto& d : s.at("domains")) {
        auto name = d.at("name").get<std::string>();
        domains.push_back(name);
        for (const auto& slot : d.at("slots")) {
          slots[name].push_back({slot.at("name").get<std::string>(), slot.at("description").get<std::string>()});
        }
      }
      std::vector<std::string> intents;
      if (s.contains("intents")) intents = s.at("intents").get<std::vector<std::string>>();
      p.schema = AnnotationSchema(std::move(domains), std::move(slots), std::move(intents));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed profile: ") + e.what());
  }
  if (p.role_vocabulary.size() < 2) {
    throw Error(ErrorCode::format_error, "profile " + p.name + " needs a user-side and a system-side role");
  }
  for (const auto& [label, role] : p.speaker_aliases) {
    if (std::find(p.role_vocabulary.begin(), p.role_vocabulary.end(), role) == p.role_vocabulary.end()) {
      throw Error(ErrorCode::format_error, "speaker alias '" + label + "' maps to undeclared role " + role);
    }
  }
  if (p.default_domain && p.schema && !p.schema->has_domain(*p.default_domain)) {
    throw Error(ErrorCode::format_error, "default domain " + *p.default_domain + " not in schema");
  }
  return p;
}

nlohmann::json profile_to_json(const DatasetProfile& p) {
  nlohmann::json j;
  j["name"] = p.name;
  j["language"] = p.language;
  j["roles"] = p.role_vocabulary;
  j["speaker_aliases"] = p.speaker_aliases;
  j["template_set"] = p.template_set;
  j["slot_aliases"] = p.slot_aliases;
  j["default_domain"] = p.default_domain ? nlohmann::json(*p.default_domain) : nlohmann::json(nullptr);
  j["kb_style"] = to_string(p.kb_style);
  j["system_opens"] = p.system_opens;
  if (p.schema) {
    nlohmann::json domains = nlohmann::json::array();
    for (const auto& d : p.schema->domains()) {
      nlohmann::json slots = nlohmann::json::array();
      for (const auto& s : p.schema->slots(d)) slots.push_back({{"name", s.name}, {"description", s.description}});
      domains.push_back({{"name", d}, {"slots", slots}});
    }
    j["schema"] = {{"domains", domains}, {"intents", p.schema->intents()}};
  } else {
    j["schema"] = nullptr;
  }
  return j;
}

void ProfileRegistry::add(DatasetProfile profile) {
  auto name = profile.name;
  profiles_.insert_or_assign(std::move(name), std::move(profile));
}

void ProfileRegistry::load_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
    }
    add(profile_from_json(j));
  }
}

const DatasetProfile& ProfileRegistry::get(std::string_view name) const {
  auto it = profiles_.find(name);
  if (it == profiles_.end()) throw Error(ErrorCode::unknown_profile, "unknown profile '" + std::string(name) + "'");
  return it->second;
}

bool ProfileRegistry::contains(std::string_view name) const { return profiles_.find(name) != profiles_.end(); }

std::vector<std::string> ProfileRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : profiles_) out.push_back(name);
  return out;
}

}  // namespace dialab
