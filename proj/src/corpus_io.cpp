#include "dialab/corpus_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dialab/error.hpp"
#include "dialab/transcript_parser.hpp"

namespace dialab {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

Triplet checked_triplet(const DatasetProfile& profile, std::string_view domain, std::string_view slot,
                        std::string_view value) {
  const auto& schema = profile.require_schema();
  Triplet t = make_triplet(domain, profile.resolve_slot(slot), value);
  schema.check(t);
  return t;
}

}  // namespace

const Dialogue* Corpus::find(std::string_view dialogue_id) const {
  for (const auto& d : dialogues) {
    if (d.id == dialogue_id) return &d;
  }
  return nullptr;
}

json triplet_to_json(const Triplet& t) { return {{"domain", t.domain}, {"slot", t.slot}, {"value", t.value}}; }

json state_to_json(const BeliefState& s) {
  json arr = json::array();
  for (const auto& t : s.triplets()) arr.push_back(triplet_to_json(t));
  return arr;
}

BeliefState state_from_json(const json& j, const DatasetProfile& profile) {
  if (!j.is_array()) throw Error(ErrorCode::format_error, "belief state must be an array of triplets");
  std::vector<Triplet> triplets;
  for (const auto& item : j) {
    if (item.is_array() && item.size() == 3) {
      triplets.push_back(checked_triplet(profile, item[0].get<std::string>(), item[1].get<std::string>(),
                                         item[2].get<std::string>()));
    } else if (item.is_object()) {
      triplets.push_back(checked_triplet(profile, item.at("domain").get<std::string>(),
                                         item.at("slot").get<std::string>(), item.at("value").get<std::string>()));
    } else {
      throw Error(ErrorCode::format_error, "malformed triplet " + item.dump());
    }
  }
  return BeliefState::from_triplets(triplets);
}

json dialogue_to_json(const Dialogue& d) {
  json j;
  j["id"] = d.id;
  j["profile"] = d.profile;
  j["mode"] = to_string(d.mode);
  json turns = json::array();
  for (const auto& t : d.turns) {
    turns.push_back({{"index", t.index}, {"speaker", t.speaker}, {"text", t.text}, {"language", t.language}});
  }
  j["turns"] = std::move(turns);
  if (d.instructions) j["instructions"] = *d.instructions;
  if (d.kb_ref) j["kb_ref"] = *d.kb_ref;
  auto states = [](const std::vector<BeliefState>& v) {
    json arr = json::array();
    for (const auto& s : v) arr.push_back(state_to_json(s));
    return arr;
  };
  if (d.gold_states) j["gold_states"] = states(*d.gold_states);
  if (d.predicted_states) j["predicted_states"] = states(*d.predicted_states);
  return j;
}

Dialogue dialogue_from_json(const json& j, const DatasetProfile& profile) {
  Dialogue d;
  try {
    if (!j.is_object()) throw Error(ErrorCode::format_error, "record is not an object");
    d.id = j.at("id").get<std::string>();
    d.profile = j.at("profile").get<std::string>();
    if (d.profile != profile.name) {
      throw Error(ErrorCode::format_error, "record profile '" + d.profile + "' does not match '" + profile.name + "'");
    }
    d.mode = j.contains("mode") ? parse_mode(j.at("mode").get<std::string>()) : DialogueMode::reference;
    int position = 0;
    for (const auto& t : j.at("turns")) {
      ++position;
      Turn turn;
      turn.index = t.value("index", position);
      const auto label = t.at("speaker").get<std::string>();
      auto role = profile.resolve_role(label);
      if (!role && normalize_token(label) == kUnknownRole) role = std::string(kUnknownRole);
      if (!role) throw Error(ErrorCode::format_error, "unknown speaker '" + label + "'");
      turn.speaker = *role;
      turn.text = t.at("text").get<std::string>();
      turn.language = t.value("language", profile.language);
      d.turns.push_back(std::move(turn));
    }
    if (j.contains("instructions") && !j.at("instructions").is_null()) {
      d.instructions = j.at("instructions").get<std::string>();
    }
    if (j.contains("kb_ref") && !j.at("kb_ref").is_null()) d.kb_ref = j.at("kb_ref").get<std::string>();
    auto states = [&](const char* key) -> std::optional<std::vector<BeliefState>> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      std::vector<BeliefState> out;
      for (const auto& s : j.at(key)) out.push_back(state_from_json(s, profile));
      return out;
    };
    d.gold_states = states("gold_states");
    d.predicted_states = states("predicted_states");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed record: ") + e.what());
  }
  return d;
}

IngestReport ingest_generic(std::string_view records, const DatasetProfile& profile, std::string corpus_id) {
  IngestReport report;
  report.corpus.id = std::move(corpus_id);
  report.corpus.profile = profile.name;
  std::set<std::string> ids;
  const auto lines = split_lines(records);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const std::size_t line_no = i + 1;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      report.issues.push_back({line_no, "ParseError", e.what()});
      continue;
    }
    try {
      Dialogue d = dialogue_from_json(j, profile);
      auto violations = validate_dialogue(d);
      if (!violations.empty()) {
        report.issues.push_back({line_no, violations.front().code, violations.front().message});
        continue;
      }
      if (!ids.insert(d.id).second) {
        report.issues.push_back({line_no, "DuplicateId", "dialogue id '" + d.id + "' repeated"});
        continue;
      }
      report.corpus.dialogues.push_back(std::move(d));
    } catch (const Error& e) {
      report.issues.push_back({line_no, std::string(to_string(e.code())), e.what()});
    }
  }
  return report;
}

std::string export_corpus(const Corpus& c) {
  std::string out;
  for (const auto& d : c.dialogues) {
    out += dialogue_to_json(d).dump();
    out += '\n';
  }
  return out;
}

Corpus ingest_multiwoz(std::string_view document, const DatasetProfile& profile, std::string corpus_id) {
  Corpus corpus;
  corpus.id = corpus_id;
  corpus.profile = profile.name;

  Dialogue* current = nullptr;
  auto start_dialogue = [&](std::string id) {
    Dialogue d;
    d.id = std::move(id);
    d.profile = profile.name;
    d.mode = DialogueMode::reference;
    d.gold_states.emplace();
    corpus.dialogues.push_back(std::move(d));
    current = &corpus.dialogues.back();
  };
  auto finish_dialogue = [&](std::size_t line_no) {
    if (!current) return;
    if (current->turns.empty()) {
      throw Error(ErrorCode::format_error, at_line(line_no) + "dialogue '" + current->id + "' has no turns");
    }
    if (current->gold_states->size() != current->user_turn_count()) {
      throw Error(ErrorCode::format_error, at_line(line_no) + "dialogue '" + current->id +
                                               "': every user turn needs a metadata block");
    }
  };

  const auto lines = split_lines(document);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = trim(lines[i]);
    if (line.empty()) continue;

    if (line.rfind("# dialogue:", 0) == 0) {
      finish_dialogue(line_no);
      auto id = std::string(trim(line.substr(11)));
      if (id.empty()) throw Error(ErrorCode::format_error, at_line(line_no) + "dialogue header without id");
      if (corpus.find(id)) throw Error(ErrorCode::format_error, at_line(line_no) + "duplicate dialogue id " + id);
      start_dialogue(std::move(id));
      continue;
    }

    std::vector<ParseWarning> ignored;
    auto blocks = scan_metadata_blocks(line, ignored);
    if (!blocks.empty()) {
      if (!current || current->turns.empty() || current->turns.back().speaker != kUserRole ||
          current->gold_states->size() == current->user_turn_count()) {
        throw Error(ErrorCode::format_error, at_line(line_no) + "metadata block does not follow a user turn");
      }
      std::vector<Triplet> triplets;
      for (const auto& item : blocks.front().items) {
        const auto value = normalize_value(item.value);
        if (value.empty() || value == "not mentioned") continue;
        auto t = resolve_metadata_item(item, profile);
        if (!t) {
          throw Error(ErrorCode::schema_violation,
                      at_line(line_no) + "unknown slot '" + (item.domain ? *item.domain + "." : "") + item.slot + "'");
        }
        triplets.push_back(*t);
      }
      try {
        current->gold_states->push_back(BeliefState::from_triplets(triplets));
      } catch (const Error& e) {
        throw Error(ErrorCode::format_error, at_line(line_no) + e.what());
      }
      continue;
    }

    auto colon = line.find(':');
    std::optional<std::string> role;
    if (colon != std::string_view::npos) role = profile.resolve_role(line.substr(0, colon));
    if (!role) throw Error(ErrorCode::format_error, at_line(line_no) + "expected 'User:' or 'System:' turn");
    if (!current) start_dialogue(corpus.id + "-1");
    const std::string expected =
        current->turns.empty() || current->turns.back().speaker != kUserRole ? std::string(kUserRole)
                                                                             : std::string(kSystemRole);
    if (*role != expected) {
      throw Error(ErrorCode::format_error, at_line(line_no) + "turns must alternate user/system, got " + *role);
    }
    if (*role == kSystemRole && current->gold_states->size() != current->user_turn_count()) {
      throw Error(ErrorCode::format_error, at_line(line_no) + "user turn is missing its metadata block");
    }
    auto text = std::string(trim(line.substr(colon + 1)));
    if (text.empty()) throw Error(ErrorCode::format_error, at_line(line_no) + "empty turn text");
    Turn turn;
    turn.index = static_cast<int>(current->turns.size()) + 1;
    turn.speaker = *role;
    turn.text = std::move(text);
    turn.language = profile.language;
    current->turns.push_back(std::move(turn));
  }
  if (!current) throw Error(ErrorCode::format_error, "document contains no dialogues");
  finish_dialogue(lines.size());
  return corpus;
}

DomainKB kb_from_json(const nlohmann::ordered_json& j) {
  try {
    std::vector<DomainKB::Entity> entities;
    for (const auto& e : j.at("entities")) {
      DomainKB::Entity entity;
      for (const auto& [key, value] : e.items()) {
        if (value.is_null()) entity.emplace_back(key, std::nullopt);
        else if (value.is_string()) entity.emplace_back(key, value.get<std::string>());
        else entity.emplace_back(key, value.dump());
      }
      entities.push_back(std::move(entity));
    }
    return DomainKB(j.at("domain").get<std::string>(), std::move(entities));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed knowledge base: ") + e.what());
  }
}

nlohmann::ordered_json kb_to_json(const DomainKB& kb) {
  nlohmann::ordered_json entities = nlohmann::ordered_json::array();
  for (const auto& entity : kb.entities()) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    for (const auto& [key, value] : entity) e[key] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
    entities.push_back(std::move(e));
  }
  return {{"domain", kb.domain()}, {"entities", entities}};
}

DomainKB load_kb(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
  }
  return kb_from_json(j);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace dialab
