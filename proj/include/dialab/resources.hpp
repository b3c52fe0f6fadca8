#pragma once

// Bundled data files: profiles/, templates/, kb/ and samples/ under a share
// directory.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "dialab/model.hpp"
#include "dialab/profile.hpp"
#include "dialab/prompt.hpp"

namespace dialab {

// $DIALAB_SHARE_DIR if set, else the build-time share directory.
std::filesystem::path default_share_dir();

struct Resources {
  std::filesystem::path share_dir;
  ProfileRegistry profiles;
  TemplateStore templates;
  std::map<std::string, DomainKB, std::less<>> kbs;  // ref = file stem

  // Throws NotFound.
  const DomainKB& kb(std::string_view ref) const;
  bool has_kb(std::string_view ref) const { return kbs.find(ref) != kbs.end(); }

  // samples/<profile>_example.txt: a transcript with one metadata block after
  // each user turn, used as the in-prompt annotation example.
  std::optional<AnnotationExample> annotation_example(const DatasetProfile& profile) const;
};

// Loads and cross-checks everything (template bundles and languages).
Resources load_resources(const std::filesystem::path& share_dir);

}  // namespace dialab
