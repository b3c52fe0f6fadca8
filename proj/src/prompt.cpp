#include "dialab/prompt.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "dialab/digest.hpp"
#include "dialab/error.hpp"
#include "dialab/transcript_parser.hpp"

namespace dialab {

namespace {

constexpr std::array<std::string_view, 7> kPlaceholders = {
    "kb", "user_instructions", "schema_slots", "schema_intents", "example_dialogue", "example_annotation",
    "dialogue_text"};
constexpr std::array<std::string_view, 3> kOptionalPlaceholders = {"schema_intents", "example_dialogue",
                                                                   "example_annotation"};

bool is_optional(std::string_view name) {
  return std::find(kOptionalPlaceholders.begin(), kOptionalPlaceholders.end(), name) != kOptionalPlaceholders.end();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

struct PlaceholderRef {
  std::size_t begin;
  std::size_t end;  // one past "}}"
  std::string name;
};

std::vector<PlaceholderRef> find_placeholders(std::string_view line, const std::string& template_id) {
  std::vector<PlaceholderRef> out;
  std::size_t pos = 0;
  while ((pos = line.find("{{", pos)) != std::string_view::npos) {
    auto close = line.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::invalid_template, template_id + ": unterminated placeholder");
    }
    out.push_back({pos, close + 2, std::string(trim(line.substr(pos + 2, close - pos - 2)))});
    pos = close + 2;
  }
  return out;
}

std::optional<SectionKind> parse_section_kind(std::string_view name) {
  static const std::map<std::string_view, SectionKind> kinds = {
      {"task_instruction", SectionKind::task_instruction},
      {"context", SectionKind::context},
      {"domain_knowledge", SectionKind::domain_knowledge},
      {"user_instructions", SectionKind::user_instructions},
      {"system_simulation", SectionKind::system_simulation},
      {"format_instructions", SectionKind::format_instructions},
      {"dialogue_payload", SectionKind::dialogue_payload},
  };
  auto it = kinds.find(name);
  if (it == kinds.end()) return std::nullopt;
  return it->second;
}

std::optional<TemplateMode> parse_template_mode(std::string_view name) {
  if (name == "one_shot") return TemplateMode::one_shot;
  if (name == "interactive") return TemplateMode::interactive;
  if (name == "annotation") return TemplateMode::annotation;
  return std::nullopt;
}

void check_layout(const PromptTemplate& t) {
  std::vector<SectionKind> order;
  std::vector<SectionKind> required;
  switch (t.mode) {
    case TemplateMode::one_shot:
      order = {SectionKind::task_instruction, SectionKind::context, SectionKind::domain_knowledge,
               SectionKind::user_instructions};
      required = {SectionKind::task_instruction, SectionKind::user_instructions};
      break;
    case TemplateMode::interactive:
      order = {SectionKind::task_instruction, SectionKind::context, SectionKind::domain_knowledge,
               SectionKind::system_simulation};
      required = {SectionKind::task_instruction, SectionKind::system_simulation};
      break;
    case TemplateMode::annotation:
      order = {SectionKind::task_instruction, SectionKind::format_instructions, SectionKind::dialogue_payload};
      required = order;
      break;
  }
  long last = -1;
  for (const auto& s : t.sections) {
    auto it = std::find(order.begin(), order.end(), s.kind);
    if (it == order.end()) {
      throw Error(ErrorCode::invalid_template, t.id + ": section " + std::string(to_string(s.kind)) +
                                                   " not allowed in " + std::string(to_string(t.mode)) + " templates");
    }
    const long idx = it - order.begin();
    if (idx <= last) {
      throw Error(ErrorCode::invalid_template, t.id + ": section " + std::string(to_string(s.kind)) + " out of order");
    }
    last = idx;
  }
  for (auto kind : required) {
    if (!t.has_section(kind)) {
      throw Error(ErrorCode::invalid_template, t.id + ": missing section " + std::string(to_string(kind)));
    }
  }
  if (t.mode == TemplateMode::interactive) {
    for (const auto& s : t.sections) {
      for (const auto& ref : find_placeholders(s.text, t.id)) {
        if (ref.name == "user_instructions") {
          throw Error(ErrorCode::invalid_template, t.id + ": interactive templates cannot take user_instructions");
        }
      }
    }
  }
}

Prompt render(const PromptTemplate& t, const std::map<std::string, std::string>& bindings) {
  Prompt prompt;
  prompt.template_id = t.id;
  std::string out;
  for (const auto& section : t.sections) {
    std::string rendered;
    for (const auto& line : split_lines(section.text)) {
      auto refs = find_placeholders(line, t.id);
      bool drop = false;
      for (const auto& ref : refs) {
        if (bindings.contains(ref.name)) continue;
        if (is_optional(ref.name)) {
          drop = true;
          continue;
        }
        if (ref.name == "kb") throw Error(ErrorCode::missing_kb, t.id + " references a knowledge base but none was given");
        if (ref.name == "user_instructions") {
          throw Error(ErrorCode::missing_instructions, t.id + " requires user instructions");
        }
        throw Error(ErrorCode::unresolved_placeholder, t.id + ": no value for {{" + ref.name + "}}");
      }
      if (drop) continue;
      std::string filled;
      std::size_t pos = 0;
      for (const auto& ref : refs) {
        filled.append(line, pos, ref.begin - pos);
        const auto& value = bindings.at(ref.name);
        filled += value;
        prompt.bound_values[ref.name] = sha256_hex(value);
        pos = ref.end;
      }
      filled.append(line, pos);
      if (!rendered.empty()) rendered += '\n';
      rendered += filled;
    }
    if (rendered.empty()) continue;
    if (!out.empty()) out += '\n';
    out += rendered;
  }
  prompt.text = std::move(out);
  return prompt;
}

std::string template_key(std::string_view set, TemplateMode mode) {
  return std::string(set) + "_" + std::string(to_string(mode));
}

}  // namespace

std::string_view to_string(TemplateMode mode) {
  switch (mode) {
    case TemplateMode::one_shot: return "one_shot";
    case TemplateMode::interactive: return "interactive";
    case TemplateMode::annotation: return "annotation";
  }
  return "one_shot";
}

std::string_view to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::task_instruction: return "task_instruction";
    case SectionKind::context: return "context";
    case SectionKind::domain_knowledge: return "domain_knowledge";
    case SectionKind::user_instructions: return "user_instructions";
    case SectionKind::system_simulation: return "system_simulation";
    case SectionKind::format_instructions: return "format_instructions";
    case SectionKind::dialogue_payload: return "dialogue_payload";
  }
  return "task_instruction";
}

bool PromptTemplate::has_section(SectionKind kind) const {
  return std::any_of(sections.begin(), sections.end(), [&](const TemplateSection& s) { return s.kind == kind; });
}

PromptTemplate parse_template(std::string_view text) {
  PromptTemplate t;
  std::optional<std::string> mode;
  bool in_sections = false;
  for (const auto& raw : split_lines(text)) {
    std::string_view line = raw;
    if (line.rfind("--- ", 0) == 0) {
      auto kind = parse_section_kind(trim(line.substr(4)));
      if (!kind) throw Error(ErrorCode::invalid_template, t.id + ": unknown section '" + std::string(line.substr(4)) + "'");
      t.sections.push_back({*kind, ""});
      in_sections = true;
      continue;
    }
    if (!in_sections) {
      if (trim(line).empty()) continue;
      auto colon = line.find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::invalid_template, "bad header line '" + std::string(line) + "'");
      }
      auto key = trim(line.substr(0, colon));
      auto value = std::string(trim(line.substr(colon + 1)));
      if (key == "id") t.id = value;
      else if (key == "language") t.language = value;
      else if (key == "mode") mode = value;
      else throw Error(ErrorCode::invalid_template, "unknown header '" + std::string(key) + "'");
      continue;
    }
    auto& body = t.sections.back().text;
    if (!body.empty() || !trim(line).empty()) {
      if (!body.empty()) body += '\n';
      body += raw;
    }
  }
  if (t.id.empty() || t.language.empty() || !mode) {
    throw Error(ErrorCode::invalid_template, "template header needs id, language and mode");
  }
  auto parsed_mode = parse_template_mode(*mode);
  if (!parsed_mode) throw Error(ErrorCode::invalid_template, t.id + ": unknown mode '" + *mode + "'");
  t.mode = *parsed_mode;
  for (auto& s : t.sections) {
    while (!s.text.empty() && std::isspace(static_cast<unsigned char>(s.text.back()))) s.text.pop_back();
    for (const auto& ref : find_placeholders(s.text, t.id)) {
      if (std::find(kPlaceholders.begin(), kPlaceholders.end(), ref.name) == kPlaceholders.end()) {
        throw Error(ErrorCode::invalid_template, t.id + ": unknown placeholder {{" + ref.name + "}}");
      }
    }
  }
  check_layout(t);
  return t;
}

void TemplateStore::add(PromptTemplate tmpl) {
  auto id = tmpl.id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

void TemplateStore::load_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      add(parse_template(buf.str()));
    } catch (const Error& e) {
      throw Error(e.code(), path.filename().string() + ": " + e.what());
    }
  }
}

const PromptTemplate& TemplateStore::find(std::string_view set, TemplateMode mode) const {
  auto it = templates_.find(template_key(set, mode));
  if (it == templates_.end()) {
    throw Error(ErrorCode::not_found, "no template " + template_key(set, mode));
  }
  return it->second;
}

bool TemplateStore::has_set(std::string_view set) const {
  const std::string prefix = std::string(set) + "_";
  return std::any_of(templates_.begin(), templates_.end(),
                     [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
}

std::vector<const PromptTemplate*> TemplateStore::all() const {
  std::vector<const PromptTemplate*> out;
  for (const auto& [_, t] : templates_) out.push_back(&t);
  return out;
}

void check_profile_templates(const DatasetProfile& profile, const TemplateStore& store) {
  if (!store.has_set(profile.template_set)) {
    throw Error(ErrorCode::not_found, "profile " + profile.name + ": template set '" + profile.template_set + "' missing");
  }
  for (auto mode : {TemplateMode::one_shot, TemplateMode::interactive, TemplateMode::annotation}) {
    try {
      const auto& t = store.find(profile.template_set, mode);
      if (t.language != profile.language) {
        throw Error(ErrorCode::invalid_template, t.id + " is '" + t.language + "' but profile " + profile.name +
                                                     " is '" + profile.language + "'");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_found) throw;
    }
  }
}

std::string render_kb(const DomainKB& kb, KbStyle style) {
  if (kb.empty()) throw Error(ErrorCode::empty_kb, "knowledge base for '" + kb.domain() + "' has no entities");
  std::string out;
  std::size_t n = 0;
  for (const auto& entity : kb.entities()) {
    std::string line;
    for (const auto& [key, value] : entity) {
      if (!value) continue;
      if (!line.empty()) line += ", ";
      line += key + ": " + *value;
    }
    ++n;
    if (!out.empty()) out += '\n';
    if (style == KbStyle::numbered_offers) out += std::to_string(n) + ". ";
    out += line;
  }
  return out;
}

std::string render_schema_slots(const DatasetProfile& profile) {
  const auto& schema = profile.require_schema();
  auto list = [&](const std::string& domain) {
    std::string out;
    for (const auto& spec : schema.slots(domain)) {
      if (!out.empty()) out += ", ";
      out += "\"" + spec.name + "\" (" + spec.description + ")";
    }
    return out;
  };
  if (schema.domains().size() == 1 && profile.default_domain) return list(schema.domains().front());
  std::string out;
  for (const auto& domain : schema.domains()) {
    if (!out.empty()) out += "; ";
    out += domain + ": " + list(domain);
  }
  return out;
}

Prompt build_generation_prompt(const TemplateStore& store, const DatasetProfile& profile, DialogueMode mode,
                               const DomainKB* kb, const std::optional<std::string>& user_instructions) {
  TemplateMode tmode;
  switch (mode) {
    case DialogueMode::one_shot: tmode = TemplateMode::one_shot; break;
    case DialogueMode::interactive: tmode = TemplateMode::interactive; break;
    default: throw Error(ErrorCode::invalid_argument, "generation mode must be one_shot or interactive");
  }
  const bool has_instructions = user_instructions && !trim(*user_instructions).empty();
  if (tmode == TemplateMode::one_shot && !has_instructions) {
    throw Error(ErrorCode::missing_instructions, "one-shot generation requires user instructions");
  }
  if (tmode == TemplateMode::interactive && user_instructions) {
    throw Error(ErrorCode::invalid_argument, "interactive generation takes no user instructions");
  }
  const auto& tmpl = store.find(profile.template_set, tmode);
  std::map<std::string, std::string> bindings;
  if (kb) bindings["kb"] = render_kb(*kb, profile.kb_style);
  if (has_instructions) bindings["user_instructions"] = std::string(trim(*user_instructions));
  return render(tmpl, bindings);
}

Prompt build_annotation_prompt(const TemplateStore& store, const DatasetProfile& profile, const Dialogue& d,
                               const std::optional<AnnotationExample>& example) {
  if (d.turns.empty()) throw Error(ErrorCode::empty_dialogue, "dialogue " + d.id + " has no turns");
  const auto& schema = profile.require_schema();
  const auto& tmpl = store.find(profile.template_set, TemplateMode::annotation);
  std::map<std::string, std::string> bindings;
  bindings["schema_slots"] = render_schema_slots(profile);
  if (!schema.intents().empty()) {
    std::string intents;
    for (const auto& i : schema.intents()) {
      if (!intents.empty()) intents += ", ";
      intents += "\"" + i + "\"";
    }
    bindings["schema_intents"] = intents;
  }
  auto transcript = [](const Dialogue& dlg) {
    std::string s = serialize_dialogue(dlg);
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  bindings["dialogue_text"] = transcript(d);
  if (example) {
    bindings["example_dialogue"] = transcript(example->dialogue);
    std::string ann;
    for (const auto& state : example->annotations) {
      if (!ann.empty()) ann += '\n';
      ann += format_metadata(state, profile);
    }
    bindings["example_annotation"] = ann;
  }
  return render(tmpl, bindings);
}

}  // namespace dialab
