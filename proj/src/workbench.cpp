#include "dialab/workbench.hpp"

#include <algorithm>

#include "dialab/error.hpp"

namespace dialab {

Workbench::Workbench(Resources resources, std::shared_ptr<FileStore> store, ChatConfig chat)
    : resources_(std::move(resources)), store_(std::move(store)), chat_(std::move(chat)) {
  factory_ = [](const ChatConfig& c) { return make_backend(c); };
}

std::shared_ptr<ChatBackend> Workbench::backend(const ChatConfig& config) const { return factory_(config); }

Dialogue Workbench::load_dialogue(std::string_view id) const {
  auto rec = store_->find("dialogues", id);
  if (!rec) throw Error(ErrorCode::not_found, "dialogue '" + std::string(id) + "' not found");
  const auto& profile = resources_.profiles.get(rec->payload.at("profile").get<std::string>());
  return dialogue_from_json(rec->payload, profile);
}

int Workbench::save_dialogue(const Dialogue& d, std::optional<int> expected_version) {
  auto violations = validate_dialogue(d);
  if (!violations.empty()) {
    throw Error(ErrorCode::format_error, "dialogue " + d.id + ": " + violations.front().code + " " +
                                             violations.front().message);
  }
  return store_->put("dialogues", d.id, dialogue_to_json(d), expected_version);
}

nlohmann::json corpus_record_to_json(const CorpusRecord& c) {
  return {{"id", c.id}, {"profile", c.profile}, {"dialogues", c.dialogues}, {"metadata", c.metadata}};
}

CorpusRecord corpus_record_from_json(const nlohmann::json& j) {
  CorpusRecord c;
  try {
    c.id = j.at("id").get<std::string>();
    c.profile = j.at("profile").get<std::string>();
    c.dialogues = j.at("dialogues").get<std::vector<std::string>>();
    c.metadata = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("malformed corpus record: ") + e.what());
  }
  return c;
}

std::optional<CorpusRecord> Workbench::find_corpus(std::string_view id) const {
  auto rec = store_->find("corpora", id);
  if (!rec) return std::nullopt;
  return corpus_record_from_json(rec->payload);
}

CorpusRecord Workbench::load_corpus(std::string_view id) const {
  if (auto c = find_corpus(id)) return *c;
  throw Error(ErrorCode::not_found, "corpus '" + std::string(id) + "' not found");
}

int Workbench::save_corpus(const CorpusRecord& c) { return store_->put("corpora", c.id, corpus_record_to_json(c)); }

void Workbench::add_to_corpus(std::string_view corpus_id, std::string_view profile, std::string_view dialogue_id) {
  std::lock_guard lock(corpus_mu_);
  auto c = find_corpus(corpus_id).value_or(CorpusRecord{std::string(corpus_id), std::string(profile), {}, {}});
  if (c.profile != profile) {
    throw Error(ErrorCode::invalid_argument, "corpus " + c.id + " belongs to profile " + c.profile);
  }
  if (std::find(c.dialogues.begin(), c.dialogues.end(), dialogue_id) == c.dialogues.end()) {
    c.dialogues.emplace_back(dialogue_id);
  }
  save_corpus(c);
}

std::vector<Dialogue> Workbench::corpus_dialogues(const CorpusRecord& c) const {
  std::vector<Dialogue> out;
  out.reserve(c.dialogues.size());
  for (const auto& id : c.dialogues) out.push_back(load_dialogue(id));
  return out;
}

}  // namespace dialab
