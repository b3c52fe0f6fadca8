#pragma once

// Chat sessions over a live chat-completion endpoint or a record/replay
// fixture store.
//
// Fixture key: SHA-256 over {"history": [[role, text], ...], "sample": k}
// where every text is canonicalized (CRLF -> LF, trailing whitespace stripped
// per line and at the end). `sample` separates repeated runs of the very same
// prompt. Fixture files live at <fixtures_dir>/<hex digest> and hold the raw
// response text.

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dialab {

enum class BackendKind { live, replay, record };

std::string_view to_string(BackendKind kind);
// Throws UnknownBackend.
BackendKind parse_backend(std::string_view text);

inline constexpr std::string_view kDefaultCredentialEnv = "DIALAB_API_KEY";

struct ChatConfig {
  BackendKind backend = BackendKind::replay;
  std::string model = "gpt-3.5-turbo";
  double temperature = 1.0;
  int max_tokens = 2048;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::filesystem::path fixtures_dir;
  std::string credential_env = std::string(kDefaultCredentialEnv);
  std::size_t context_budget = 200000;  // characters across the whole history
  int sample = 0;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
};

// Everything except the credential, for run metadata.
nlohmann::json config_to_json(const ChatConfig& c);

enum class ChatRole { user, assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

std::string canonicalize_message(std::string_view text);
std::string fixture_key(std::span<const ChatMessage> history, int sample);

class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& key) const;
  std::optional<std::string> lookup(const std::string& key) const;
  // Atomic write. Re-storing an identical response is a no-op; a different
  // response under an existing key throws FixtureConflict.
  void store(const std::string& key, std::string_view response);
  // Throws StoreNotWritable.
  void require_writable() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex write_mu_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // `history` ends with the new user message.
  virtual std::string complete(std::span<const ChatMessage> history, const ChatConfig& config) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Generic chat-completion wire shape: POST {model, temperature, max_tokens,
// messages: [{role, content}]}, reply choices[0].message.content.
// Retries transport failures and 5xx responses with exponential backoff.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string credential, Sleeper sleeper = {});
  std::string complete(std::span<const ChatMessage> history, const ChatConfig& config) override;

  int last_attempts() const { return last_attempts_; }

 private:
  std::string credential_;
  Sleeper sleeper_;
  int last_attempts_ = 0;
};

class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<FixtureStore> store);
  // Throws FixtureMiss naming the digest.
  std::string complete(std::span<const ChatMessage> history, const ChatConfig& config) override;

 private:
  std::shared_ptr<FixtureStore> store_;
};

class RecordBackend : public ChatBackend {
 public:
  RecordBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<FixtureStore> store);
  std::string complete(std::span<const ChatMessage> history, const ChatConfig& config) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<FixtureStore> store_;
};

// Deterministic in-process responder, used to author fixtures and in tests.
class ScriptedBackend : public ChatBackend {
 public:
  using Responder = std::function<std::string(std::span<const ChatMessage>, const ChatConfig&)>;
  explicit ScriptedBackend(Responder responder);
  std::string complete(std::span<const ChatMessage> history, const ChatConfig& config) override;

 private:
  Responder responder_;
};

// Resolves the backend for `config`. Live and record need the credential
// variable (MissingCredential); record and replay need a fixture dir, and
// record needs it writable (StoreNotWritable).
std::shared_ptr<ChatBackend> make_backend(const ChatConfig& config, Sleeper sleeper = {});

class ChatSession {
 public:
  // `history` resumes a persisted session; it must alternate user/assistant
  // starting with a user message (InvalidArgument otherwise).
  ChatSession(std::string id, std::shared_ptr<ChatBackend> backend, ChatConfig config,
              std::vector<ChatMessage> history = {});

  const std::string& id() const { return id_; }
  const ChatConfig& config() const { return config_; }
  const std::vector<ChatMessage>& history() const { return history_; }

  // Appends the message and the reply. Nothing is appended on failure.
  // Throws InvalidArgument (empty message), ContextOverflow, or whatever the
  // backend raises.
  std::string send(std::string_view message);

 private:
  std::string id_;
  std::shared_ptr<ChatBackend> backend_;
  ChatConfig config_;
  std::vector<ChatMessage> history_;
};

ChatSession open_session(const ChatConfig& config, std::string id);

}  // namespace dialab
