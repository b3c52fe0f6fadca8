#include "dialab/resources.hpp"

#include <cstdlib>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/transcript_parser.hpp"

#ifndef DIALAB_SHARE_DIR
#define DIALAB_SHARE_DIR "share"
#endif

namespace dialab {

namespace fs = std::filesystem;

fs::path default_share_dir() {
  if (const char* env = std::getenv("DIALAB_SHARE_DIR"); env && *env) return env;
  return DIALAB_SHARE_DIR;
}

const DomainKB& Resources::kb(std::string_view ref) const {
  auto it = kbs.find(ref);
  if (it == kbs.end()) throw Error(ErrorCode::not_found, "unknown knowledge base '" + std::string(ref) + "'");
  return it->second;
}

std::optional<AnnotationExample> Resources::annotation_example(const DatasetProfile& profile) const {
  const auto path = share_dir / "samples" / (profile.name + "_example.txt");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec) || !profile.schema) return std::nullopt;
  const auto text = read_file(path);
  auto dialogue = parse_dialogue(text, profile);
  if (!dialogue.ok()) throw Error(ErrorCode::format_error, path.string() + ": example transcript does not parse");
  auto annotations = parse_annotations(text, profile, &*dialogue.value);
  if (!annotations.ok()) throw Error(ErrorCode::format_error, path.string() + ": example annotations do not parse");
  AnnotationExample ex;
  ex.dialogue = std::move(*dialogue.value);
  ex.dialogue.id = profile.name + "-example";
  for (auto& a : *annotations.value) ex.annotations.push_back(std::move(a.state));
  return ex;
}

Resources load_resources(const fs::path& share_dir) {
  Resources r;
  r.share_dir = share_dir;
  if (!fs::is_directory(share_dir)) throw Error(ErrorCode::not_found, "share dir " + share_dir.string() + " missing");
  r.profiles.load_dir(share_dir / "profiles");
  r.templates.load_dir(share_dir / "templates");
  for (const auto& name : r.profiles.names()) check_profile_templates(r.profiles.get(name), r.templates);
  const auto kb_dir = share_dir / "kb";
  if (fs::is_directory(kb_dir)) {
    for (const auto& entry : fs::directory_iterator(kb_dir)) {
      if (entry.path().extension() != ".json") continue;
      r.kbs.emplace(entry.path().stem().string(), load_kb(entry.path()));
    }
  }
  return r;
}

}  // namespace dialab
