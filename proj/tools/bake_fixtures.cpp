// bake_fixtures: records the bundled replay fixtures from the scripted replies
// under share/scripts by driving the real pipeline with a record backend.
//
//   bake_fixtures --share-dir share --out share/fixtures
//   bake_fixtures --share-dir share --check share/fixtures   (exit 1 if stale)

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/pipeline.hpp"
#include "dialab/resources.hpp"
#include "dialab/review_service.hpp"
#include "dialab/workbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dialab;

namespace {

bool is_fixture_name(const std::string& name) {
  return name.size() == 64 && std::all_of(name.begin(), name.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::map<std::string, std::string> read_fixtures(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && is_fixture_name(name)) out[name] = read_file(e.path());
  }
  return out;
}

ScriptedBackend::Responder make_responder(const fs::path& share) {
  const fs::path scripts = share / "scripts";
  const std::string generation = read_file(scripts / "generation.txt");
  const json session = json::parse(read_file(share / "samples" / "multiwoz_session.json"));
  const std::string session_opening = session.at("exchanges").at(0).at("user").get<std::string>();

  return [=](std::span<const ChatMessage> history, const ChatConfig& cfg) -> std::string {
    const std::string& first = history.front().text;
    if (first.find("Annotate only the User's turns.") != std::string::npos) {
      if (first.find(session_opening) != std::string::npos) return read_file(scripts / "annotations" / "session.txt");
      char name[32];
      std::snprintf(name, sizeof name, "sample-%02d.txt", cfg.sample);
      return read_file(scripts / "annotations" / name);
    }
    if (first.starts_with("Create a dialogue")) return generation;
    if (history.size() == 1) return session.at("acknowledgement").get<std::string>();
    const auto exchange = (history.size() - 1) / 2 - 1;
    const auto& ex = session.at("exchanges").at(exchange);
    if (history.back().text != ex.at("user").get<std::string>()) {
      throw Error(ErrorCode::invalid_argument, "unscripted session message: " + history.back().text);
    }
    return ex.at("system").get<std::string>();
  };
}

void bake(const fs::path& share, const fs::path& out) {
  const fs::path data = fs::temp_directory_path() / ("dialab-bake-" + std::to_string(::getpid()));
  fs::remove_all(data);

  ChatConfig chat;
  chat.backend = BackendKind::record;
  chat.fixtures_dir = out;
  Workbench wb(load_resources(share), std::make_shared<FileStore>(data), chat);
  auto fixtures = std::make_shared<FixtureStore>(out);
  fixtures->require_writable();
  auto scripted = std::make_shared<ScriptedBackend>(make_responder(share));
  wb.set_backend_factory(
      [=](const ChatConfig&) -> std::shared_ptr<ChatBackend> { return std::make_shared<RecordBackend>(scripted, fixtures); });

  const auto& profile = wb.profile("multiwoz");
  const std::string instructions = read_file(share / "samples" / "multiwoz_instructions.txt");

  GenerateOptions gen;
  gen.profile = "multiwoz";
  gen.kb_ref = "multiwoz_frankie_and_bennys";
  gen.instructions = instructions;
  const auto generated = cmd_generate(wb, gen);
  const auto annotated = cmd_annotate(wb, generated.corpus_id);
  if (!annotated.failed.empty()) throw Error(ErrorCode::invalid_argument, "scripted annotation failed to parse");

  StabilityOptions st;
  st.profile = "multiwoz";
  st.kb_ref = gen.kb_ref;
  st.instructions = instructions;
  st.gold = load_gold(share / "samples" / "multiwoz_gold.json", profile);
  cmd_stability(wb, st);

  const json session = json::parse(read_file(share / "samples" / "multiwoz_session.json"));
  ReviewService service(wb);
  auto s = service.create_session(session.at("profile"), session.at("kb_ref").get<std::string>());
  for (const auto& ex : session.at("exchanges")) service.post_turn(s.id, ex.at("user"));
  annotate_dialogue(wb, service.finish_session(s.id));

  fs::remove_all(data);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Record the bundled replay fixtures from scripted replies"};
  std::string share = default_share_dir().string();
  std::string out, check;
  app.add_option("--share-dir", share, "Share directory holding scripts/")->capture_default_str();
  auto* out_opt = app.add_option("--out", out, "Fixture directory to (re)write");
  auto* check_opt = app.add_option("--check", check, "Fixture directory to compare against");
  out_opt->excludes(check_opt);
  CLI11_PARSE(app, argc, argv);
  if (out.empty() && check.empty()) {
    std::cerr << "error: one of --out or --check is required\n";
    return 2;
  }

  try {
    if (!out.empty()) {
      for (const auto& [name, _] : read_fixtures(out)) fs::remove(fs::path(out) / name);
      bake(share, out);
      std::cout << read_fixtures(out).size() << " fixtures written to " << out << "\n";
      return 0;
    }
    const fs::path tmp = fs::temp_directory_path() / ("dialab-bake-check-" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    bake(share, tmp);
    const auto fresh = read_fixtures(tmp);
    const auto bundled = read_fixtures(check);
    fs::remove_all(tmp);
    int stale = 0;
    for (const auto& [name, text] : fresh) {
      auto it = bundled.find(name);
      if (it == bundled.end()) {
        std::cerr << "missing: " << name << "\n";
        ++stale;
      } else if (it->second != text) {
        std::cerr << "differs: " << name << "\n";
        ++stale;
      }
    }
    for (const auto& [name, _] : bundled) {
      if (!fresh.contains(name)) {
        std::cerr << "unused: " << name << "\n";
        ++stale;
      }
    }
    std::cout << fresh.size() << " fixtures checked, " << stale << " stale\n";
    return stale == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}
