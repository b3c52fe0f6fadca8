#pragma once

// HTTP service for interactive collection sessions, expert reviews, reports
// and questionnaire export.
//
//   POST /sessions                    {profile, kb_ref?}
//   POST /sessions/{id}/turns         {text}
//   POST /sessions/{id}/finish
//   GET  /sessions/{id}
//   GET  /dialogues/{id}
//   POST /dialogues/{id}/annotate     {sample?}
//   POST /reviews                     {dialogue_id, kind, reviewer_id}
//   GET  /reviews/{id}
//   PUT  /reviews/{id}/marks          {marks: [...], expected_version?}
//   GET  /reports/corpus/{id}?scope=schema|corpus_gold|dialogue_gold
//   GET  /reports/stability/{id}
//   GET  /questionnaires/{id}?lang=en|it&format=json|csv
//
// Errors: {"error": {"code": "<ErrorCode name>", "message": "..."}}.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/error.hpp"
#include "dialab/llm_gateway.hpp"
#include "dialab/model.hpp"
#include "dialab/workbench.hpp"

namespace httplib {
class Server;
}

namespace dialab {

enum class SessionState { open, finished, aborted };

std::string_view to_string(SessionState s);

struct CollectionSession {
  std::string id;
  std::string profile;
  std::optional<std::string> kb_ref;
  SessionState state = SessionState::open;
  std::optional<std::string> acknowledgement;  // model reply to the priming prompt
  std::vector<Turn> turns;
  std::vector<ChatMessage> history;  // full chat history, priming prompt first
  std::optional<std::string> dialogue_id;
};

nlohmann::json session_to_json(const CollectionSession& s);
CollectionSession session_from_json(const nlohmann::json& j);

// Corpus that collects every finished session of a profile.
std::string interactive_corpus_id(std::string_view profile);

int http_status(ErrorCode code);
nlohmann::json error_body(const Error& e);

class ReviewService {
 public:
  explicit ReviewService(Workbench& wb);

  CollectionSession create_session(const std::string& profile, const std::optional<std::string>& kb_ref);
  // Returns the appended system turn.
  Turn post_turn(const std::string& session_id, const std::string& human_text);
  std::string finish_session(const std::string& session_id);
  CollectionSession get_session(const std::string& session_id) const;

  // Dispatch used by the HTTP layer and tests alike: returns (status, body).
  struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
  };
  Response handle(const std::string& method, const std::string& path,
                  const std::multimap<std::string, std::string>& query, const std::string& body);

  void install_routes(httplib::Server& server);

 private:
  struct Live {
    std::mutex mu;  // one in-flight model call per session
    std::unique_ptr<ChatSession> chat;
  };

  std::shared_ptr<Live> live_session(const CollectionSession& s);
  nlohmann::json route(const std::string& method, const std::vector<std::string>& parts,
                       const std::multimap<std::string, std::string>& query, const nlohmann::json& body,
                       Response& raw);
  void save_session(const CollectionSession& s);

  Workbench& wb_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Live>> live_;
};

}  // namespace dialab
