#include "dialab/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <httplib.h>

#include "dialab/atomic_file.hpp"
#include "dialab/corpus_io.hpp"
#include "dialab/digest.hpp"
#include "dialab/error.hpp"

namespace dialab {

namespace fs = std::filesystem;

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::invalid_argument, "endpoint needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::size_t history_chars(std::span<const ChatMessage> history) {
  std::size_t n = 0;
  for (const auto& m : history) n += m.text.size();
  return n;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::live: return "live";
    case BackendKind::replay: return "replay";
    case BackendKind::record: return "record";
  }
  return "replay";
}

BackendKind parse_backend(std::string_view text) {
  if (text == "live") return BackendKind::live;
  if (text == "replay") return BackendKind::replay;
  if (text == "record") return BackendKind::record;
  throw Error(ErrorCode::unknown_backend, "unknown backend '" + std::string(text) + "'");
}

nlohmann::json config_to_json(const ChatConfig& c) {
  return {{"backend", to_string(c.backend)},
          {"model", c.model},
          {"temperature", c.temperature},
          {"max_tokens", c.max_tokens},
          {"endpoint", c.endpoint},
          {"credential_env", c.credential_env},
          {"context_budget", c.context_budget},
          {"sample", c.sample}};
}

std::string_view to_string(ChatRole role) { return role == ChatRole::user ? "user" : "assistant"; }

std::string canonicalize_message(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t line_start = 0;
  auto flush_line = [&](std::string_view line) {
    auto end = line.find_last_not_of(" \t\r\f\v");
    out.append(line.substr(0, end == std::string_view::npos ? 0 : end + 1));
  };
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      flush_line(text.substr(line_start, i - line_start));
      if (i < text.size()) out += '\n';
      line_start = i + 1;
    }
  }
  auto end = out.find_last_not_of('\n');
  out.resize(end == std::string::npos ? 0 : end + 1);
  return out;
}

std::string fixture_key(std::span<const ChatMessage> history, int sample) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& m : history) h.push_back({to_string(m.role), canonicalize_message(m.text)});
  nlohmann::json doc = {{"history", h}, {"sample", sample}};
  return sha256_hex(doc.dump());
}

FixtureStore::FixtureStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path FixtureStore::path_for(const std::string& key) const { return dir_ / key; }

std::optional<std::string> FixtureStore::lookup(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  return read_file(path);
}

void FixtureStore::store(const std::string& key, std::string_view response) {
  std::lock_guard lock(write_mu_);
  if (auto existing = lookup(key)) {
    if (*existing == response) return;
    throw Error(ErrorCode::fixture_conflict, "fixture " + key + " already holds a different response");
  }
  write_file_atomic(path_for(key), response);
}

void FixtureStore::require_writable() const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw Error(ErrorCode::store_not_writable, "fixture dir " + dir_.string() + " cannot be created");
  }
  const auto probe = dir_ / (".probe-" + std::to_string(::getpid()));
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::store_not_writable, "fixture dir " + dir_.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

HttpChatBackend::HttpChatBackend(std::string credential, Sleeper sleeper)
    : credential_(std::move(credential)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpChatBackend::complete(std::span<const ChatMessage> history, const ChatConfig& config) {
  const auto ep = split_endpoint(config.endpoint);
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : history) messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  const nlohmann::json body = {{"model", config.model},
                               {"temperature", config.temperature},
                               {"max_tokens", config.max_tokens},
                               {"messages", messages}};
  const httplib::Headers headers = {{"Authorization", "Bearer " + credential_}};

  httplib::Client client(ep.base);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);

  const int attempts = std::max(1, config.max_attempts);
  std::string last_error;
  auto delay = config.backoff;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last_attempts_ = attempt;
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status >= 400) {
      throw Error(ErrorCode::transport_error, "HTTP " + std::to_string(res->status) + " from " + config.endpoint +
                                                  " (attempt " + std::to_string(attempt) + ", not retried)");
    } else {
      try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::transport_error, std::string("malformed completion response: ") + e.what());
      }
    }
    if (attempt < attempts) {
      sleeper_(delay);
      delay *= 2;
    }
  }
  throw Error(ErrorCode::transport_error,
              last_error + " from " + config.endpoint + " after " + std::to_string(attempts) + " attempts");
}

ReplayBackend::ReplayBackend(std::shared_ptr<FixtureStore> store) : store_(std::move(store)) {}

std::string ReplayBackend::complete(std::span<const ChatMessage> history, const ChatConfig& config) {
  const auto key = fixture_key(history, config.sample);
  if (auto hit = store_->lookup(key)) return *hit;
  throw Error(ErrorCode::fixture_miss, "no fixture for history digest " + key + " in " + store_->dir().string());
}

RecordBackend::RecordBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<FixtureStore> store)
    : inner_(std::move(inner)), store_(std::move(store)) {}

std::string RecordBackend::complete(std::span<const ChatMessage> history, const ChatConfig& config) {
  const auto key = fixture_key(history, config.sample);
  auto reply = inner_->complete(history, config);
  store_->store(key, reply);
  return reply;
}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

std::string ScriptedBackend::complete(std::span<const ChatMessage> history, const ChatConfig& config) {
  return responder_(history, config);
}

std::shared_ptr<ChatBackend> make_backend(const ChatConfig& config, Sleeper sleeper) {
  auto credential = [&config]() {
    const char* v = std::getenv(config.credential_env.c_str());
    if (!v || !*v) {
      throw Error(ErrorCode::missing_credential, "environment variable " + config.credential_env + " is not set");
    }
    return std::string(v);
  };
  auto fixtures = [&config]() {
    if (config.fixtures_dir.empty()) throw Error(ErrorCode::invalid_argument, "backend needs a fixtures dir");
    return std::make_shared<FixtureStore>(config.fixtures_dir);
  };
  switch (config.backend) {
    case BackendKind::live:
      return std::make_shared<HttpChatBackend>(credential(), std::move(sleeper));
    case BackendKind::replay:
      return std::make_shared<ReplayBackend>(fixtures());
    case BackendKind::record: {
      auto store = fixtures();
      store->require_writable();
      return std::make_shared<RecordBackend>(std::make_shared<HttpChatBackend>(credential(), std::move(sleeper)),
                                             store);
    }
  }
  throw Error(ErrorCode::unknown_backend, "unknown backend");
}

ChatSession::ChatSession(std::string id, std::shared_ptr<ChatBackend> backend, ChatConfig config,
                         std::vector<ChatMessage> history)
    : id_(std::move(id)), backend_(std::move(backend)), config_(std::move(config)), history_(std::move(history)) {
  if (history_.size() % 2 != 0) throw Error(ErrorCode::invalid_argument, "history must hold complete exchanges");
  for (std::size_t i = 0; i < history_.size(); ++i) {
    if (history_[i].role != (i % 2 == 0 ? ChatRole::user : ChatRole::assistant)) {
      throw Error(ErrorCode::invalid_argument, "history must alternate user and assistant messages");
    }
  }
}

std::string ChatSession::send(std::string_view message) {
  if (message.empty()) throw Error(ErrorCode::invalid_argument, "message is empty");
  if (history_chars(history_) + message.size() > config_.context_budget) {
    throw Error(ErrorCode::context_overflow, "history of session " + id_ + " would exceed " +
                                                 std::to_string(config_.context_budget) + " characters");
  }
  std::vector<ChatMessage> next = history_;
  next.push_back({ChatRole::user, std::string(message)});
  auto reply = backend_->complete(next, config_);
  next.push_back({ChatRole::assistant, reply});
  history_ = std::move(next);
  return reply;
}

ChatSession open_session(const ChatConfig& config, std::string id) {
  return ChatSession(std::move(id), make_backend(config), config);
}

}  // namespace dialab
