#include "dialab/transcript_parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace dialab {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string snippet_of(std::string_view s) {
  s = trim(s);
  constexpr std::size_t kMax = 60;
  return std::string(s.substr(0, kMax));
}

bool is_markup(char c) { return c == '*' || c == '_' || c == '#' || c == '>' || c == '`'; }

// Position of the '{' that opens a metadata block on this line, plus the
// column where the marker (including leading markup) starts.
struct MarkerHit {
  std::size_t marker_col = 0;
  std::size_t brace_col = 0;
};

std::optional<MarkerHit> find_metadata_marker(std::string_view line, std::size_t from = 0) {
  static constexpr std::string_view kWord = "metadata";
  for (std::size_t i = from; i + kWord.size() <= line.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < kWord.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(line[i + k])) != kWord[k]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    if (i > 0 && std::isalnum(static_cast<unsigned char>(line[i - 1]))) continue;
    std::size_t p = i + kWord.size();
    while (p < line.size() && (is_space(line[p]) || is_markup(line[p]) || line[p] == ':' || line[p] == '"')) ++p;
    if (p < line.size() && line[p] == '{') {
      std::size_t m = i;
      while (m > 0 && (is_markup(line[m - 1]) || line[m - 1] == '(')) --m;
      return MarkerHit{m, p};
    }
  }
  return std::nullopt;
}

struct SpeakerLine {
  bool numbered = false;
  bool indented = false;
  std::string label;
  std::string text;
};

std::optional<SpeakerLine> match_speaker_line(std::string_view line) {
  SpeakerLine out;
  std::size_t p = 0;
  const std::size_t n = line.size();
  out.indented = n > 0 && (line[0] == ' ' || line[0] == '\t');
  auto skip_ws = [&] { while (p < n && is_space(line[p])) ++p; };
  auto skip_markup = [&] { while (p < n && (is_markup(line[p]) || is_space(line[p]))) ++p; };
  skip_markup();
  if (p < n && std::isdigit(static_cast<unsigned char>(line[p]))) {
    while (p < n && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
    if (p >= n || (line[p] != '.' && line[p] != ')')) return std::nullopt;
    ++p;
    out.numbered = true;
    skip_ws();
    skip_markup();
  }
  if (p >= n) return std::nullopt;
  const auto first = static_cast<unsigned char>(line[p]);
  if (!std::isalpha(first) && first < 0x80) return std::nullopt;
  const std::size_t label_start = p;
  while (p < n && line[p] != ':') {
    const auto c = static_cast<unsigned char>(line[p]);
    const bool allowed = std::isalnum(c) || c >= 0x80 || c == ' ' || c == '\'' || c == '-' || c == '(' ||
                         c == ')' || c == '_' || c == '*';
    if (!allowed || p - label_start > 40) return std::nullopt;
    ++p;
  }
  if (p >= n) return std::nullopt;
  std::string_view label = line.substr(label_start, p - label_start);
  while (!label.empty() && (is_markup(label.back()) || is_space(label.back()))) label.remove_suffix(1);
  if (label.empty()) return std::nullopt;
  std::size_t words = 1;
  for (char c : label) words += (c == ' ');
  if (words > 4) return std::nullopt;
  ++p;
  skip_markup();
  out.label = std::string(label);
  out.text = std::string(trim(line.substr(std::min(p, n))));
  return out;
}

std::optional<std::string> resolve_label(const DatasetProfile& profile, std::string_view label) {
  if (auto role = profile.resolve_role(label)) return role;
  // "System (Cambridge InfoTown)" -> "System"
  if (auto paren = label.find('('); paren != std::string_view::npos) {
    if (auto role = profile.resolve_role(trim(label.substr(0, paren)))) return role;
    auto close = label.find(')', paren);
    if (close != std::string_view::npos) {
      if (auto role = profile.resolve_role(label.substr(paren + 1, close - paren - 1))) return role;
    }
  }
  return std::nullopt;
}

bool looks_like_name(std::string_view label) {
  std::size_t words = 1;
  for (char c : label) words += (c == ' ');
  return words <= 3 && !label.empty() && std::isupper(static_cast<unsigned char>(label.front()));
}

// ---------------------------------------------------------------------------
// Metadata block body parsing.

class BlockBodyParser {
 public:
  BlockBodyParser(std::string body, std::size_t line, std::vector<ParseWarning>& warnings)
      : s_(std::move(body)), line_(line), warnings_(warnings) {}

  std::vector<RawMetadataItem> run() {
    if (p_ < s_.size() && s_[p_] == '{') parse_object(std::nullopt, out_);
    return std::move(out_);
  }

 private:
  static std::string clean(std::string_view token) {
    token = trim(token);
    while (token.size() >= 1 && (token.front() == '\'' || token.front() == '[')) token = trim(token.substr(1));
    while (token.size() >= 1 && (token.back() == '\'' || token.back() == ']')) token = trim(token.substr(0, token.size() - 1));
    return std::string(token);
  }

  void skip_ws_commas() {
    while (p_ < s_.size() && (is_space(s_[p_]) || s_[p_] == ',')) ++p_;
  }

  std::string read_until(std::string_view stops) {
    std::size_t start = p_;
    while (p_ < s_.size() && stops.find(s_[p_]) == std::string_view::npos) ++p_;
    return std::string(s_.substr(start, p_ - start));
  }

  void warn(std::string code, std::string_view snip) { warnings_.push_back({line_, std::move(code), snippet_of(snip)}); }

  void parse_object(const std::optional<std::string>& domain, std::vector<RawMetadataItem>& sink) {
    ++p_;  // '{'
    std::optional<std::size_t> last;
    while (true) {
      skip_ws_commas();
      if (p_ >= s_.size()) return;
      if (s_[p_] == '}') {
        ++p_;
        return;
      }
      if (s_[p_] == '{') {
        warn("StrayObject", s_.substr(p_, 20));
        parse_object(domain, sink);
        continue;
      }
      std::string key = clean(read_until(":,{}"));
      if (p_ < s_.size() && s_[p_] == ':') {
        ++p_;
        while (p_ < s_.size() && is_space(s_[p_])) ++p_;
        if (p_ < s_.size() && s_[p_] == '{') {
          if (!domain) {
            parse_object(key, sink);
          } else if (normalize_token(key) == "book" || normalize_token(key) == "semi") {
            parse_object(domain, sink);
          } else {
            warn("NestedValue", key);
            std::vector<RawMetadataItem> discard;
            parse_object(domain, discard);
          }
          last.reset();
          continue;
        }
        std::string value = clean(read_until(",}"));
        sink.push_back({domain, key, value});
        last = sink.size() - 1;
        continue;
      }
      // Bare token without a key: an extra value for the previous slot.
      if (key.empty()) {
        if (p_ < s_.size() && s_[p_] == '{') continue;
        if (p_ < s_.size()) ++p_;
        continue;
      }
      if (last) {
        sink[*last].value += ", " + key;
      } else {
        warn("BareValue", key);
      }
    }
  }

  std::string s_;
  std::size_t p_ = 0;
  std::size_t line_;
  std::vector<ParseWarning>& warnings_;
  std::vector<RawMetadataItem> out_;
};

std::string strip_double_quotes(std::string_view raw, std::size_t& ascii_quotes) {
  std::string out;
  out.reserve(raw.size());
  ascii_quotes = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '"') {
      ++ascii_quotes;
      continue;
    }
    if (c == '`') continue;
    // U+201C / U+201D
    if (static_cast<unsigned char>(c) == 0xE2 && i + 2 < raw.size() &&
        static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(raw[i + 2]) == 0x9C || static_cast<unsigned char>(raw[i + 2]) == 0x9D)) {
      i += 2;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

struct BlockSpan {
  std::size_t start_line = 0;  // 0-based
  std::size_t marker_col = 0;
  std::size_t end_line = 0;
  std::string body;  // from the opening '{' through the closing '}'
  bool repaired = false;
};

bool is_stop_line(std::string_view line) {
  if (find_metadata_marker(line)) return true;
  auto sp = match_speaker_line(line);
  return sp && sp->numbered;
}

std::vector<BlockSpan> find_blocks(const std::vector<std::string_view>& lines) {
  std::vector<BlockSpan> out;
  std::size_t i = 0;
  std::size_t col = 0;
  while (i < lines.size()) {
    auto hit = find_metadata_marker(lines[i], col);
    if (!hit) {
      ++i;
      col = 0;
      continue;
    }
    BlockSpan span;
    span.start_line = i;
    span.marker_col = hit->marker_col;
    int depth = 0;
    bool closed = false;
    std::size_t j = i;
    std::size_t c = hit->brace_col;
    std::string body;
    while (j < lines.size()) {
      if (j > i && is_stop_line(lines[j])) break;
      const auto line = lines[j];
      for (; c < line.size(); ++c) {
        body.push_back(line[c]);
        if (line[c] == '{') ++depth;
        if (line[c] == '}' && --depth == 0) {
          closed = true;
          break;
        }
      }
      if (closed) break;
      body.push_back('\n');
      ++j;
      c = 0;
    }
    if (closed) {
      span.end_line = j;
      span.body = std::move(body);
      out.push_back(std::move(span));
      i = j;
      col = c + 1;
      continue;
    }
    // Unbalanced: recover with the rest of the opening line, closed off.
    std::string_view rest = lines[i].substr(hit->brace_col);
    int d = 0;
    for (char ch : rest) d += (ch == '{') - (ch == '}');
    span.body = std::string(rest) + std::string(static_cast<std::size_t>(std::max(d, 0)), '}');
    span.end_line = i;
    span.repaired = true;
    out.push_back(std::move(span));
    ++i;
    col = 0;
  }
  return out;
}

std::vector<RawMetadataBlock> scan_blocks(const std::vector<std::string_view>& lines,
                                          std::vector<ParseWarning>& warnings) {
  std::vector<RawMetadataBlock> out;
  for (auto& span : find_blocks(lines)) {
    const std::size_t line_no = span.start_line + 1;
    if (span.repaired) warnings.push_back({line_no, "UnbalancedBraces", snippet_of(lines[span.start_line])});
    std::size_t quotes = 0;
    std::string body = strip_double_quotes(span.body, quotes);
    if (quotes % 2 != 0) warnings.push_back({line_no, "UnbalancedQuotes", snippet_of(span.body)});
    BlockBodyParser parser(std::move(body), line_no, warnings);
    out.push_back({line_no, parser.run()});
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ParseReport<Dialogue> parse_dialogue(std::string_view text, const DatasetProfile& profile) {
  ParseReport<Dialogue> report;
  const auto lines = split_lines(text);

  // Lines covered by metadata blocks are not dialogue text.
  std::map<std::size_t, std::size_t> cut_at;  // line -> column where a marker starts
  std::set<std::size_t> skipped;
  for (const auto& span : find_blocks(lines)) {
    auto it = cut_at.find(span.start_line);
    if (it == cut_at.end() || span.marker_col < it->second) cut_at[span.start_line] = span.marker_col;
    for (std::size_t l = span.start_line + 1; l <= span.end_line; ++l) skipped.insert(l);
  }

  Dialogue d;
  d.profile = profile.name;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (skipped.contains(i)) continue;
    std::string_view line = lines[i];
    if (auto it = cut_at.find(i); it != cut_at.end()) line = line.substr(0, it->second);
    if (trim(line).empty()) continue;
    const std::size_t line_no = i + 1;

    auto sp = match_speaker_line(line);
    std::optional<std::string> role;
    bool starts_turn = false;
    if (sp) {
      role = resolve_label(profile, sp->label);
      if (sp->indented && !d.turns.empty()) {
        starts_turn = sp->numbered && role.has_value();
      } else {
        starts_turn = role.has_value() || sp->numbered || (looks_like_name(sp->label) && !sp->text.empty());
      }
    }
    if (starts_turn) {
      if (!role) {
        report.warnings.push_back({line_no, "UnknownSpeaker", snippet_of(sp->label)});
        role = std::string(kUnknownRole);
      }
      Turn turn;
      turn.speaker = *role;
      turn.text = sp->text;
      turn.language = profile.language;
      d.turns.push_back(std::move(turn));
      continue;
    }
    if (d.turns.empty()) {
      report.warnings.push_back({line_no, "IgnoredLine", snippet_of(line)});
      continue;
    }
    auto& current = d.turns.back().text;
    if (!current.empty()) current += '\n';
    current += std::string(trim(line));
  }

  std::vector<Turn> kept;
  for (auto& turn : d.turns) {
    if (trim(turn.text).empty()) {
      report.warnings.push_back({0, "EmptyTurnDropped", turn.speaker});
      continue;
    }
    turn.index = static_cast<int>(kept.size()) + 1;
    kept.push_back(std::move(turn));
  }
  d.turns = std::move(kept);

  if (d.turns.empty()) {
    report.fatal = Error(ErrorCode::no_turns_found, "no speaker-labelled turns found");
    return report;
  }
  d.id = "parsed";
  auto violations = validate_dialogue(d);
  d.id.clear();
  if (!violations.empty()) {
    report.fatal = Error(ErrorCode::format_error, violations.front().code + ": " + violations.front().message);
    return report;
  }
  report.value = std::move(d);
  return report;
}

std::vector<RawMetadataBlock> scan_metadata_blocks(std::string_view text, std::vector<ParseWarning>& warnings) {
  return scan_blocks(split_lines(text), warnings);
}

std::optional<Triplet> resolve_metadata_item(const RawMetadataItem& item, const DatasetProfile& profile) {
  if (!profile.schema) return std::nullopt;
  const auto& schema = *profile.schema;
  const std::string value = normalize_value(item.value);
  if (value.empty()) return std::nullopt;

  auto lookup = [&](const std::string& domain, std::string_view raw_slot) -> std::optional<Triplet> {
    std::string slot = profile.resolve_slot(raw_slot);
    if (!schema.has_slot(domain, slot)) {
      std::replace(slot.begin(), slot.end(), ' ', '_');
      if (!schema.has_slot(domain, slot)) return std::nullopt;
    }
    return Triplet{domain, slot, value};
  };

  if (item.domain) return lookup(normalize_token(*item.domain), item.slot);

  const std::string key = normalize_token(item.slot);
  for (char sep : {'-', '.'}) {
    if (auto pos = key.find(sep); pos != std::string::npos && schema.has_domain(key.substr(0, pos))) {
      return lookup(key.substr(0, pos), key.substr(pos + 1));
    }
  }
  if (profile.default_domain) return lookup(*profile.default_domain, key);
  auto owners = schema.domains_owning(profile.resolve_slot(key));
  if (owners.size() == 1) return lookup(owners.front(), key);
  return std::nullopt;
}

ParseReport<std::vector<AnnotatedTurn>> parse_annotations(std::string_view text, const DatasetProfile& profile,
                                                          const Dialogue* dialogue) {
  ParseReport<std::vector<AnnotatedTurn>> report;
  auto blocks = scan_metadata_blocks(text, report.warnings);
  if (blocks.empty()) {
    report.fatal = Error(ErrorCode::no_metadata_found, "no metadata blocks found");
    return report;
  }

  std::vector<BeliefState> states;
  for (const auto& block : blocks) {
    std::map<SlotKey, Triplet> entries;
    for (const auto& item : block.items) {
      const std::string shown = (item.domain ? *item.domain + "." : std::string()) + item.slot;
      if (normalize_value(item.value).empty() || normalize_value(item.value) == "not mentioned") {
        report.warnings.push_back({block.line, "EmptyValue", shown});
        continue;
      }
      auto t = resolve_metadata_item(item, profile);
      if (!t) {
        report.warnings.push_back({block.line, "UnknownSlot", shown});
        continue;
      }
      if (entries.contains(t->key())) report.warnings.push_back({block.line, "DuplicateInBlock", shown});
      entries.insert_or_assign(t->key(), *t);
    }
    std::vector<Triplet> flat;
    for (auto& [_, t] : entries) flat.push_back(std::move(t));
    states.push_back(BeliefState::from_triplets(flat));
  }

  std::vector<AnnotatedTurn> out;
  if (!dialogue) {
    for (std::size_t k = 0; k < states.size(); ++k) out.push_back({static_cast<int>(k) + 1, states[k]});
    report.value = std::move(out);
    return report;
  }

  const auto users = dialogue->user_turn_positions();
  for (std::size_t k = users.size(); k < blocks.size(); ++k) {
    report.warnings.push_back({blocks[k].line, "ExtraBlock", "block " + std::to_string(k + 1)});
  }
  BeliefState carried;
  for (std::size_t k = 0; k < users.size(); ++k) {
    const int turn_index = dialogue->turns[users[k]].index;
    if (k < states.size()) {
      carried = states[k];
    } else {
      report.warnings.push_back({0, "MissingBlock", "turn " + std::to_string(turn_index)});
    }
    out.push_back({turn_index, carried});
  }
  report.value = std::move(out);
  return report;
}

std::string serialize_dialogue(const Dialogue& d) {
  std::string out;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const auto& turn = d.turns[i];
    out += std::to_string(i + 1) + ". " + DatasetProfile::display_label(turn.speaker) + ": ";
    const auto lines = split_lines(turn.text);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (k > 0) out += "\n   ";
      out += std::string(lines[k]);
    }
    out += '\n';
  }
  return out;
}

std::string format_metadata(const BeliefState& state, const DatasetProfile& profile) {
  const auto triplets = state.triplets();
  auto slot_order = [&](const std::string& domain) {
    std::vector<std::string> order;
    if (profile.schema) {
      for (const auto& spec : profile.schema->slots(domain)) order.push_back(spec.name);
    }
    for (const auto& t : triplets) {
      if (t.domain == domain && std::find(order.begin(), order.end(), t.slot) == order.end()) order.push_back(t.slot);
    }
    return order;
  };
  auto render_slots = [&](const std::string& domain) {
    std::string out;
    for (const auto& slot : slot_order(domain)) {
      auto v = state.value_of({domain, slot});
      if (!v) continue;
      if (!out.empty()) out += ", ";
      out += slot + ": " + *v;
    }
    return out;
  };

  std::vector<std::string> domains;
  if (profile.schema) domains = profile.schema->domains();
  for (const auto& t : triplets) {
    if (std::find(domains.begin(), domains.end(), t.domain) == domains.end()) domains.push_back(t.domain);
  }
  const bool flat = profile.default_domain &&
                    std::all_of(triplets.begin(), triplets.end(),
                                [&](const Triplet& t) { return t.domain == *profile.default_domain; });
  if (flat) return "metadata: {" + render_slots(*profile.default_domain) + "}";

  std::string body;
  for (const auto& domain : domains) {
    std::string inner = render_slots(domain);
    if (inner.empty()) continue;
    if (!body.empty()) body += ", ";
    body += domain + ": {" + inner + "}";
  }
  return "metadata: {" + body + "}";
}

}  // namespace dialab
