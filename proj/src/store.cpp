#include "dialab/store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "dialab/atomic_file.hpp"
#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"

namespace dialab {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kExtension = ".json";

StoredRecord record_from_json(const nlohmann::json& j) {
  StoredRecord r;
  r.kind = j.at("kind").get<std::string>();
  r.id = j.at("id").get<std::string>();
  r.version = j.at("version").get<int>();
  r.created_at = j.at("created_at").get<std::string>();
  r.updated_at = j.at("updated_at").get<std::string>();
  r.payload = j.at("payload");
  return r;
}

nlohmann::json record_to_json(const StoredRecord& r) {
  return {{"kind", r.kind},
          {"id", r.id},
          {"version", r.version},
          {"created_at", r.created_at},
          {"updated_at", r.updated_at},
          {"payload", r.payload}};
}

}  // namespace

bool valid_store_name(std::string_view name) {
  if (name.empty() || name.front() == '.' || name.size() > 200) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {}

fs::path FileStore::path_for(std::string_view kind, std::string_view id) const {
  if (!valid_store_name(kind)) throw Error(ErrorCode::invalid_argument, "invalid record kind '" + std::string(kind) + "'");
  if (!valid_store_name(id)) throw Error(ErrorCode::invalid_argument, "invalid record id '" + std::string(id) + "'");
  return root_ / std::string(kind) / (std::string(id) + std::string(kExtension));
}

std::mutex& FileStore::key_mutex(const std::string& key) {
  std::lock_guard lock(table_mu_);
  auto& slot = key_mu_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

int FileStore::put(std::string_view kind, std::string_view id, const nlohmann::json& payload,
                   std::optional<int> expected_version) {
  const auto path = path_for(kind, id);
  std::lock_guard lock(key_mutex(std::string(kind) + "/" + std::string(id)));
  auto current = find(kind, id);
  const int current_version = current ? current->version : 0;
  if (expected_version && *expected_version != current_version) {
    throw Error(ErrorCode::version_conflict, std::string(kind) + "/" + std::string(id) + " is at version " +
                                                 std::to_string(current_version) + ", expected " +
                                                 std::to_string(*expected_version));
  }
  const std::string now = clock_ ? clock_() : utc_timestamp();
  StoredRecord next;
  next.kind = std::string(kind);
  next.id = std::string(id);
  next.version = current_version + 1;
  next.created_at = current ? current->created_at : now;
  next.updated_at = now;
  next.payload = payload;
  write_file_atomic(path, record_to_json(next).dump(2) + "\n", fault_hook_);
  return next.version;
}

std::optional<StoredRecord> FileStore::find(std::string_view kind, std::string_view id) const {
  const auto path = path_for(kind, id);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    return record_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
  }
}

StoredRecord FileStore::get(std::string_view kind, std::string_view id) const {
  if (auto r = find(kind, id)) return *r;
  throw Error(ErrorCode::not_found, std::string(kind) + "/" + std::string(id) + " not found");
}

bool FileStore::contains(std::string_view kind, std::string_view id) const { return find(kind, id).has_value(); }

std::vector<std::string> FileStore::list(std::string_view kind, std::string_view prefix) const {
  if (!valid_store_name(kind)) throw Error(ErrorCode::invalid_argument, "invalid record kind '" + std::string(kind) + "'");
  std::vector<std::string> ids;
  const auto dir = root_ / std::string(kind);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return ids;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    // Temp files end in ".tmp.<pid>.<n>" and never match.
    if (name.size() <= kExtension.size() || !name.ends_with(kExtension)) continue;
    auto id = name.substr(0, name.size() - kExtension.size());
    if (id.starts_with(prefix)) ids.push_back(std::move(id));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace dialab
