#pragma once

#include <filesystem>
#include <functional>
#include <string_view>

namespace dialab {

// Writes to a sibling temp file, flushes, then renames over `path`. Readers
// see either the old or the new content. `before_rename` runs after the temp
// file is complete; throwing from it leaves the old file untouched
// and the temp file in place, as a crash would.
// Throws StoreNotWritable on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void()>& before_rename = {});

}  // namespace dialab
