#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dialab/digest.hpp"
#include "dialab/error.hpp"
#include "dialab/llm_gateway.hpp"
#include "support.hpp"

using namespace dialab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<ChatMessage> history(std::initializer_list<std::string> texts) {
  std::vector<ChatMessage> out;
  ChatRole role = ChatRole::user;
  for (const auto& t : texts) {
    out.push_back({role, t});
    role = role == ChatRole::user ? ChatRole::assistant : ChatRole::user;
  }
  return out;
}

std::shared_ptr<ScriptedBackend> echo_backend(std::atomic<int>* calls = nullptr) {
  return std::make_shared<ScriptedBackend>([calls](std::span<const ChatMessage> h, const ChatConfig& cfg) {
    if (calls) ++*calls;
    return "reply to " + h.back().text + " #" + std::to_string(cfg.sample);
  });
}

// Local chat-completion endpoint that fails `failures` times with `status`.
struct FakeEndpoint {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::string last_auth;
  json last_body;

  FakeEndpoint(int failures, int status) {
    server.Post("/v1/chat/completions", [this, failures, status](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits;
      last_auth = req.get_header_value("Authorization");
      last_body = json::parse(req.body);
      if (n <= failures) {
        res.status = status;
        res.set_content("{\"error\":\"busy\"}", "application/json");
        return;
      }
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Hello from the endpoint."}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeEndpoint() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
};

}  // namespace

TEST_CASE("fixture keys are stable under canonicalization") {
  CHECK(canonicalize_message("a  \r\nb\t\n\n\n") == "a\nb");
  const auto k1 = fixture_key(history({"Hello there.  \r\nSecond line"}), 0);
  const auto k2 = fixture_key(history({"Hello there.\nSecond line\n\n"}), 0);
  CHECK(k1 == k2);
  CHECK(k1.size() == 64);
  CHECK(k1 != fixture_key(history({"Hello there.\nSecond line"}), 1));
  CHECK(k1 != fixture_key(history({"Hello there. Second line"}), 0));
  CHECK(fixture_key(history({"x"}), 3) == sha256_hex(R"({"history":[["user","x"]],"sample":3})"));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("record then replay returns the recorded replies") {
  testing::TempDir dir;
  auto store = std::make_shared<FixtureStore>(dir.path());
  std::atomic<int> calls{0};
  ChatConfig cfg;
  RecordBackend record(echo_backend(&calls), store);
  const auto h = history({"Hi"});
  CHECK(record.complete(h, cfg) == "reply to Hi #0");
  CHECK(record.complete(h, cfg) == "reply to Hi #0");
  CHECK(calls == 2);
  CHECK(fs::is_regular_file(store->path_for(fixture_key(h, 0))));

  ReplayBackend replay(store);
  CHECK(replay.complete(h, cfg) == "reply to Hi #0");
  cfg.sample = 4;
  try {
    replay.complete(h, cfg);
    FAIL("expected a fixture miss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::fixture_miss);
    CHECK(std::string(e.what()).find(fixture_key(h, 4)) != std::string::npos);
  }
  CHECK_THROWS_CODE(store->store(fixture_key(h, 0), "something else"), ErrorCode::fixture_conflict);
}

TEST_CASE("backend selection and environment checks") {
  testing::TempDir dir;
  ChatConfig cfg;
  cfg.credential_env = "DIALAB_TEST_UNSET_CREDENTIAL";
  ::unsetenv(cfg.credential_env.c_str());
  cfg.backend = BackendKind::live;
  CHECK_THROWS_CODE(make_backend(cfg), ErrorCode::missing_credential);

  cfg.backend = BackendKind::record;
  std::ofstream(dir / "plain-file") << "x";
  cfg.fixtures_dir = dir / "plain-file" / "fixtures";
  CHECK_THROWS_CODE(make_backend(cfg), ErrorCode::store_not_writable);
  cfg.fixtures_dir = dir / "fixtures";
  CHECK_THROWS_CODE(make_backend(cfg), ErrorCode::missing_credential);
  ::setenv(cfg.credential_env.c_str(), "sk-test", 1);
  CHECK(dynamic_cast<RecordBackend*>(make_backend(cfg).get()) != nullptr);
  ::unsetenv(cfg.credential_env.c_str());

  cfg.backend = BackendKind::replay;
  CHECK(dynamic_cast<ReplayBackend*>(make_backend(cfg).get()) != nullptr);
  CHECK(parse_backend("record") == BackendKind::record);
  CHECK_THROWS_CODE(parse_backend("magic"), ErrorCode::unknown_backend);
}

TEST_CASE("HTTP backend retries server errors with backoff") {
  FakeEndpoint endpoint(2, 503);
  std::vector<long> delays;
  HttpChatBackend backend("sk-test", [&](std::chrono::milliseconds d) { delays.push_back(d.count()); });
  ChatConfig cfg;
  cfg.endpoint = endpoint.url();
  cfg.model = "test-model";
  CHECK(backend.complete(history({"Hi"}), cfg) == "Hello from the endpoint.");
  CHECK(backend.last_attempts() == 3);
  CHECK(delays == std::vector<long>{500, 1000});
  CHECK(endpoint.last_auth == "Bearer sk-test");
  CHECK(endpoint.last_body.at("model") == "test-model");
  CHECK(endpoint.last_body.at("messages").at(0).at("content") == "Hi");
}

TEST_CASE("HTTP backend gives up after the attempt budget") {
  FakeEndpoint endpoint(10, 500);
  HttpChatBackend backend("sk-test", [](std::chrono::milliseconds) {});
  ChatConfig cfg;
  cfg.endpoint = endpoint.url();
  CHECK_THROWS_CODE(backend.complete(history({"Hi"}), cfg), ErrorCode::transport_error);
  CHECK(endpoint.hits == 3);
}

TEST_CASE("HTTP backend does not retry client errors") {
  FakeEndpoint endpoint(10, 401);
  HttpChatBackend backend("sk-test", [](std::chrono::milliseconds) {});
  ChatConfig cfg;
  cfg.endpoint = endpoint.url();
  CHECK_THROWS_CODE(backend.complete(history({"Hi"}), cfg), ErrorCode::transport_error);
  CHECK(endpoint.hits == 1);
}

TEST_CASE("chat session history") {
  ChatConfig cfg;
  ChatSession s("s1", echo_backend(), cfg);
  CHECK(s.send("one") == "reply to one #0");
  CHECK(s.send("two") == "reply to two #0");
  REQUIRE(s.history().size() == 4);
  CHECK(s.history()[2] == ChatMessage{ChatRole::user, "two"});

  ChatSession resumed("s1", echo_backend(), cfg, s.history());
  resumed.send("three");
  CHECK(resumed.history().size() == 6);
  CHECK_THROWS_CODE(ChatSession("bad", echo_backend(), cfg, history({"a"})), ErrorCode::invalid_argument);
  CHECK_THROWS_CODE(s.send(""), ErrorCode::invalid_argument);
}

TEST_CASE("failures leave the history untouched") {
  ChatConfig cfg;
  cfg.context_budget = 20;
  ChatSession s("s1", echo_backend(), cfg);
  s.send("short");
  const auto before = s.history();
  CHECK_THROWS_CODE(s.send("this message is far too long"), ErrorCode::context_overflow);
  CHECK(s.history() == before);

  auto failing = std::make_shared<ScriptedBackend>([](std::span<const ChatMessage>, const ChatConfig&) -> std::string {
    throw Error(ErrorCode::transport_error, "down");
  });
  ChatSession f("s2", failing, ChatConfig{});
  CHECK_THROWS_CODE(f.send("hello"), ErrorCode::transport_error);
  CHECK(f.history().empty());
}

TEST_CASE("run metadata omits the credential") {
  ChatConfig cfg;
  const auto j = config_to_json(cfg);
  CHECK(j.at("credential_env") == "DIALAB_API_KEY");
  CHECK(j.at("model") == "gpt-3.5-turbo");
  CHECK_FALSE(j.contains("fixtures_dir"));
}
