#include "dialab/review_service.hpp"

#include <cstdio>

#include <httplib.h>

#include "dialab/error.hpp"
#include "dialab/pipeline.hpp"
#include "dialab/prompt.hpp"
#include "dialab/questionnaire.hpp"
#include "dialab/review.hpp"

namespace dialab {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::optional<std::string> query_value(const std::multimap<std::string, std::string>& q, const std::string& key) {
  auto it = q.find(key);
  if (it == q.end()) return std::nullopt;
  return it->second;
}

std::string required_string(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key) || !body.at(key).is_string()) {
    throw Error(ErrorCode::invalid_argument, std::string("field '") + key + "' is required");
  }
  return body.at(key).get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return std::nullopt;
  if (!body.at(key).is_string()) throw Error(ErrorCode::invalid_argument, std::string("field '") + key + "' must be a string");
  return body.at(key).get<std::string>();
}

json turn_to_json(const Turn& t) {
  return {{"index", t.index}, {"speaker", t.speaker}, {"text", t.text}, {"language", t.language}};
}

}  // namespace

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::open: return "open";
    case SessionState::finished: return "finished";
    case SessionState::aborted: return "aborted";
  }
  return "open";
}

json session_to_json(const CollectionSession& s) {
  json turns = json::array();
  for (const auto& t : s.turns) turns.push_back(turn_to_json(t));
  json history = json::array();
  for (const auto& m : s.history) history.push_back({{"role", to_string(m.role)}, {"text", m.text}});
  return {{"id", s.id},
          {"profile", s.profile},
          {"kb_ref", s.kb_ref ? json(*s.kb_ref) : json(nullptr)},
          {"state", to_string(s.state)},
          {"acknowledgement", s.acknowledgement ? json(*s.acknowledgement) : json(nullptr)},
          {"turns", turns},
          {"history", history},
          {"dialogue_id", s.dialogue_id ? json(*s.dialogue_id) : json(nullptr)}};
}

CollectionSession session_from_json(const json& j) {
  CollectionSession s;
  try {
    s.id = j.at("id").get<std::string>();
    s.profile = j.at("profile").get<std::string>();
    if (!j.at("kb_ref").is_null()) s.kb_ref = j.at("kb_ref").get<std::string>();
    const auto state = j.at("state").get<std::string>();
    s.state = state == "finished" ? SessionState::finished
              : state == "aborted" ? SessionState::aborted
                                   : SessionState::open;
    if (!j.at("acknowledgement").is_null()) s.acknowledgement = j.at("acknowledgement").get<std::string>();
    for (const auto& t : j.at("turns")) {
      s.turns.push_back({t.at("index").get<int>(), t.at("speaker").get<std::string>(), t.at("text").get<std::string>(),
                         t.at("language").get<std::string>()});
    }
    for (const auto& m : j.at("history")) {
      s.history.push_back(
          {m.at("role").get<std::string>() == "user" ? ChatRole::user : ChatRole::assistant, m.at("text").get<std::string>()});
    }
    if (!j.at("dialogue_id").is_null()) s.dialogue_id = j.at("dialogue_id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed session record: ") + e.what());
  }
  return s;
}

std::string interactive_corpus_id(std::string_view profile) { return "interactive-" + std::string(profile); }

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found:
    case ErrorCode::unknown_profile:
      return 404;
    case ErrorCode::version_conflict:
    case ErrorCode::session_finished:
    case ErrorCode::task_submitted:
    case ErrorCode::fixture_conflict:
      return 409;
    case ErrorCode::missing_prerequisite:
    case ErrorCode::incomplete_marks:
    case ErrorCode::too_short:
    case ErrorCode::pair_outside_s:
    case ErrorCode::no_relevant_turns:
    case ErrorCode::no_marks:
    case ErrorCode::no_metadata_found:
    case ErrorCode::no_turns_found:
      return 422;
    case ErrorCode::fixture_miss:
    case ErrorCode::transport_error:
      return 502;
    case ErrorCode::missing_credential:
    case ErrorCode::store_not_writable:
      return 503;
    default:
      return 400;
  }
}

json error_body(const Error& e) {
  return {{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
}

ReviewService::ReviewService(Workbench& wb) : wb_(wb) {}

void ReviewService::save_session(const CollectionSession& s) { wb_.store().put("sessions", s.id, session_to_json(s)); }

CollectionSession ReviewService::get_session(const std::string& session_id) const {
  auto rec = wb_.store().find("sessions", session_id);
  if (!rec) throw Error(ErrorCode::not_found, "session '" + session_id + "' not found");
  return session_from_json(rec->payload);
}

CollectionSession ReviewService::create_session(const std::string& profile_name,
                                                const std::optional<std::string>& kb_ref) {
  const auto& res = wb_.resources();
  const auto& profile = res.profiles.get(profile_name);
  const DomainKB* kb = kb_ref ? &res.kb(*kb_ref) : nullptr;
  const Prompt prompt = build_generation_prompt(res.templates, profile, DialogueMode::interactive, kb, std::nullopt);

  ChatConfig cfg = wb_.chat_config();
  cfg.sample = 0;
  auto backend = wb_.backend(cfg);

  CollectionSession s;
  s.profile = profile.name;
  s.kb_ref = kb_ref;
  // Reserve an id before calling the model so concurrent creations never collide.
  int n = static_cast<int>(wb_.store().list("sessions", "s-").size());
  for (;;) {
    char id[16];
    std::snprintf(id, sizeof id, "s-%04d", ++n);
    s.id = id;
    try {
      wb_.store().put("sessions", s.id, session_to_json(s), 0);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::version_conflict) throw;
    }
  }

  auto live = std::make_shared<Live>();
  live->chat = std::make_unique<ChatSession>(s.id, backend, cfg);
  try {
    auto ack = live->chat->send(prompt.text);
    s.acknowledgement = ack;
    if (profile.system_opens) {
      s.turns.push_back({1, profile.system_side_role(), canonicalize_message(ack), profile.language});
    }
  } catch (...) {
    s.state = SessionState::aborted;
    save_session(s);
    throw;
  }
  s.history = live->chat->history();
  save_session(s);
  std::lock_guard lock(mu_);
  live_[s.id] = live;
  return s;
}

std::shared_ptr<ReviewService::Live> ReviewService::live_session(const CollectionSession& s) {
  std::lock_guard lock(mu_);
  auto& slot = live_[s.id];
  if (!slot) {
    // Resume from the persisted history, e.g. after a restart.
    ChatConfig cfg = wb_.chat_config();
    cfg.sample = 0;
    slot = std::make_shared<Live>();
    slot->chat = std::make_unique<ChatSession>(s.id, wb_.backend(cfg), cfg, s.history);
  }
  return slot;
}

Turn ReviewService::post_turn(const std::string& session_id, const std::string& human_text) {
  auto probe = get_session(session_id);
  if (probe.state != SessionState::open) {
    throw Error(ErrorCode::session_finished, "session " + session_id + " is " + std::string(to_string(probe.state)));
  }
  auto live = live_session(probe);
  std::lock_guard turn_lock(live->mu);
  auto s = get_session(session_id);  // re-read under the session lock
  if (s.state != SessionState::open) {
    throw Error(ErrorCode::session_finished, "session " + session_id + " is " + std::string(to_string(s.state)));
  }
  const std::string text = canonicalize_message(human_text);
  if (text.empty()) throw Error(ErrorCode::invalid_argument, "turn text is empty");
  const auto& profile = wb_.profile(s.profile);

  auto reply = live->chat->send(text);
  const int next = static_cast<int>(s.turns.size()) + 1;
  s.turns.push_back({next, profile.user_side_role(), text, profile.language});
  Turn system_turn{next + 1, profile.system_side_role(), canonicalize_message(reply), profile.language};
  s.turns.push_back(system_turn);
  s.history = live->chat->history();
  save_session(s);
  return system_turn;
}

std::string ReviewService::finish_session(const std::string& session_id) {
  auto probe = get_session(session_id);
  if (probe.state != SessionState::open) {
    throw Error(ErrorCode::session_finished, "session " + session_id + " is " + std::string(to_string(probe.state)));
  }
  auto live = live_session(probe);
  std::lock_guard turn_lock(live->mu);
  auto s = get_session(session_id);
  if (s.state != SessionState::open) {
    throw Error(ErrorCode::session_finished, "session " + session_id + " is " + std::string(to_string(s.state)));
  }
  if (s.turns.size() < 2) {
    throw Error(ErrorCode::too_short, "session " + session_id + " has " + std::to_string(s.turns.size()) +
                                          " turns; at least 2 are needed");
  }
  Dialogue d;
  d.id = "dlg-" + s.id;
  d.profile = s.profile;
  d.mode = DialogueMode::interactive;
  d.turns = s.turns;
  d.kb_ref = s.kb_ref;
  wb_.save_dialogue(d);
  wb_.add_to_corpus(interactive_corpus_id(s.profile), s.profile, d.id);

  s.state = SessionState::finished;
  s.dialogue_id = d.id;
  save_session(s);
  std::lock_guard lock(mu_);
  live_.erase(s.id);
  return d.id;
}

json ReviewService::route(const std::string& method, const std::vector<std::string>& p,
                          const std::multimap<std::string, std::string>& query, const json& body, Response& raw) {
  const auto n = p.size();
  if (n >= 1 && p[0] == "sessions") {
    if (n == 1 && method == "POST") {
      raw.status = 201;
      return session_to_json(create_session(required_string(body, "profile"), optional_string(body, "kb_ref")));
    }
    if (n == 2 && method == "GET") return session_to_json(get_session(p[1]));
    if (n == 3 && p[2] == "turns" && method == "POST") {
      auto turn = post_turn(p[1], required_string(body, "text"));
      return {{"turn", turn_to_json(turn)}, {"session", session_to_json(get_session(p[1]))}};
    }
    if (n == 3 && p[2] == "finish" && method == "POST") return {{"dialogue_id", finish_session(p[1])}};
  }
  if (n >= 2 && p[0] == "dialogues") {
    if (n == 2 && method == "GET") return dialogue_to_json(wb_.load_dialogue(p[1]));
    if (n == 3 && p[2] == "annotate" && method == "POST") {
      const int sample = body.is_object() ? body.value("sample", 0) : 0;
      auto one = annotate_dialogue(wb_, p[1], sample);
      json ws = json::array();
      for (const auto& w : one.warnings) ws.push_back(parse_warning_to_json(w));
      return {{"dialogue", dialogue_to_json(one.dialogue)}, {"warnings", ws}};
    }
  }
  if (n >= 1 && p[0] == "reviews") {
    if (n == 1 && method == "POST") {
      auto task = create_review(wb_, required_string(body, "dialogue_id"),
                                parse_review_kind(required_string(body, "kind")), required_string(body, "reviewer_id"));
      raw.status = 201;
      return review_outcome_to_json(score_review(wb_, task));
    }
    if (n == 2 && method == "GET") return review_outcome_to_json(score_review(wb_, load_review(wb_, p[1])));
    if (n == 3 && p[2] == "marks" && method == "PUT") {
      std::optional<int> expected;
      if (body.is_object() && body.contains("expected_version") && !body.at("expected_version").is_null()) {
        expected = body.at("expected_version").get<int>();
      }
      return review_outcome_to_json(submit_marks(wb_, p[1], body, expected));
    }
  }
  if (n == 3 && p[0] == "reports" && method == "GET") {
    if (p[1] == "corpus") {
      EvaluateOptions opts;
      if (auto scope = query_value(query, "scope")) opts.scope = parse_slot_scope(*scope);
      return evaluation_report_to_json(cmd_evaluate(wb_, p[2], opts));
    }
    if (p[1] == "stability") {
      auto rec = wb_.store().find("reports", p[2]);
      if (!rec) throw Error(ErrorCode::not_found, "no stability report for '" + p[2] + "'");
      return rec->payload;
    }
  }
  if (n == 2 && p[0] == "questionnaires" && method == "GET") {
    const auto lang = query_value(query, "lang").value_or("en");
    const auto q = export_questionnaire(wb_.load_dialogue(p[1]), lang);
    if (query_value(query, "format").value_or("json") == "csv") {
      raw.content_type = "text/csv; charset=utf-8";
      raw.body = questionnaire_to_csv(q);
      return nullptr;
    }
    return questionnaire_to_json(q);
  }
  std::string joined;
  for (const auto& part : p) joined += "/" + part;
  throw Error(ErrorCode::not_found, "no route for " + method + " " + (joined.empty() ? "/" : joined));
}

ReviewService::Response ReviewService::handle(const std::string& method, const std::string& path,
                                              const std::multimap<std::string, std::string>& query,
                                              const std::string& body) {
  Response r;
  try {
    json parsed = json::object();
    if (!body.empty()) {
      try {
        parsed = json::parse(body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("request body is not JSON: ") + e.what());
      }
    }
    json out = route(method, split_path(path), query, parsed, r);
    if (!out.is_null()) r.body = out.dump();
  } catch (const Error& e) {
    r.status = http_status(e.code());
    r.content_type = "application/json";
    r.body = error_body(e).dump();
  } catch (const json::exception& e) {
    r.status = 400;
    r.content_type = "application/json";
    r.body = error_body(Error(ErrorCode::invalid_argument, e.what())).dump();
  }
  return r;
}

void ReviewService::install_routes(httplib::Server& server) {
  auto handler = [this](const char* method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
      auto out = handle(method, req.path, query, req.body);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
  };
  server.Get(".*", handler("GET"));
  server.Post(".*", handler("POST"));
  server.Put(".*", handler("PUT"));
}

}  // namespace dialab
