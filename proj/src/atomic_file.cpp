#include "dialab/atomic_file.hpp"

#include <atomic>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include "dialab/error.hpp"

namespace dialab {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content, const std::function<void()>& before_rename) {
  static std::atomic<unsigned long> counter{0};
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::store_not_writable, "cannot create " + path.parent_path().string() + ": " + ec.message());

  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::store_not_writable, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::store_not_writable, "short write to " + tmp.string());
    }
  }
  // A throwing hook behaves like a crash: the temp file stays behind.
  if (before_rename) before_rename();
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::store_not_writable, "cannot rename into " + path.string());
  }
}

}  // namespace dialab
