#pragma once

// File-backed record store.
//
// Layout: <root>/<kind>/<id>.json, each file holding
//   {"kind", "id", "version", "created_at", "updated_at", "payload"}.
// Writes go through a temp file and a rename, so readers only ever see
// complete records. Versions start at 1 and grow by one per write.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dialab {

struct StoredRecord {
  std::string kind;
  std::string id;
  int version = 0;
  std::string created_at;  // ISO-8601 UTC
  std::string updated_at;
  nlohmann::json payload;
};

class FileStore {
 public:
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Throws VersionConflict, StoreNotWritable, InvalidArgument (bad kind/id).
  int put(std::string_view kind, std::string_view id, const nlohmann::json& payload,
          std::optional<int> expected_version = std::nullopt);
  // Throws NotFound.
  StoredRecord get(std::string_view kind, std::string_view id) const;
  std::optional<StoredRecord> find(std::string_view kind, std::string_view id) const;
  bool contains(std::string_view kind, std::string_view id) const;
  // Sorted ids of `kind` starting with `prefix`.
  std::vector<std::string> list(std::string_view kind, std::string_view prefix = {}) const;

  // Test hook run between the temp write and the rename.
  void set_fault_hook(std::function<void()> hook) { fault_hook_ = std::move(hook); }
  // Fixed clock for reproducible timestamps; empty restores the wall clock.
  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

 private:
  std::filesystem::path path_for(std::string_view kind, std::string_view id) const;
  std::mutex& key_mutex(const std::string& key);

  std::filesystem::path root_;
  std::function<void()> fault_hook_;
  std::function<std::string()> clock_;
  std::mutex table_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mu_;
};

// Allowed in kinds and ids: ASCII letters, digits, '-', '_', '.'; no leading dot.
bool valid_store_name(std::string_view name);

std::string utc_timestamp();

}  // namespace dialab
