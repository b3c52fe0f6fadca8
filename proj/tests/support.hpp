#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>

#include <unistd.h>

#include "dialab/llm_gateway.hpp"
#include "dialab/resources.hpp"
#include "dialab/store.hpp"
#include "dialab/workbench.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path share_dir() { return fs::path(DIALAB_TEST_SHARE_DIR); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("dialab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline const dialab::Resources& resources() {
  static const dialab::Resources r = dialab::load_resources(share_dir());
  return r;
}

// Bundled resources plus profile "mini": the MultiWOZ profile cut down to a
// five-slot restaurant schema, so |S| = 5 as in the worked examples.
inline const dialab::Resources& mini_resources() {
  static const dialab::Resources r = [] {
    dialab::Resources out = resources();
    dialab::DatasetProfile p = out.profiles.get("multiwoz");
    p.name = "mini";
    p.schema = dialab::AnnotationSchema(
        {"restaurant"}, {{"restaurant",
                          {{"food", "type of food"},
                           {"area", "area of the city"},
                           {"pricerange", "price range"},
                           {"people", "number of people"},
                           {"time", "time of the booking"}}}});
    out.profiles.add(p);
    return out;
  }();
  return r;
}

// Workbench over the bundled replay fixtures and a fresh store.
inline dialab::Workbench replay_workbench(const fs::path& data_dir, const dialab::Resources& res = resources()) {
  dialab::ChatConfig chat;
  chat.backend = dialab::BackendKind::replay;
  chat.fixtures_dir = share_dir() / "fixtures";
  auto store = std::make_shared<dialab::FileStore>(data_dir);
  store->set_clock([] { return std::string("2024-01-01T00:00:00Z"); });
  return dialab::Workbench(res, store, chat);
}

// Routes every model call of `wb` to `responder`.
inline void script(dialab::Workbench& wb, dialab::ScriptedBackend::Responder responder) {
  auto backend = std::make_shared<dialab::ScriptedBackend>(std::move(responder));
  wb.set_backend_factory([backend](const dialab::ChatConfig&) -> std::shared_ptr<dialab::ChatBackend> { return backend; });
}

}  // namespace testing

#define CHECK_THROWS_CODE(expr, ecode)                                  \
  do {                                                                  \
    bool caught_ = false;                                               \
    try {                                                               \
      (void)(expr);                                                     \
    } catch (const dialab::Error& e_) {                                 \
      caught_ = true;                                                   \
      CHECK_MESSAGE(e_.code() == (ecode), dialab::to_string(e_.code())); \
    }                                                                   \
    CHECK_MESSAGE(caught_, "expected " << dialab::to_string(ecode));     \
  } while (0)
