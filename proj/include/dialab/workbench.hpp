#pragma once

// Shared application state for the batch commands and the review service:
// bundled resources, the record store and the chat backend configuration.
//
// Store kinds used:
//   dialogues/<id>   dialogue record (corpus-io JSON layout)
//   corpora/<id>     {id, profile, dialogues: [ids], metadata}
//   prompts/<id>     {text, template_id, bound_values}
//   reviews/<id>     review task (see review.hpp)
//   sessions/<id>    collection session (see review_service.hpp)
//   reports/<id>     last stability report of a corpus

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialab/corpus_io.hpp"
#include "dialab/llm_gateway.hpp"
#include "dialab/resources.hpp"
#include "dialab/store.hpp"

namespace dialab {

using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const ChatConfig&)>;

struct CorpusRecord {
  std::string id;
  std::string profile;
  std::vector<std::string> dialogues;
  nlohmann::json metadata = nlohmann::json::object();
};

class Workbench {
 public:
  Workbench(Resources resources, std::shared_ptr<FileStore> store, ChatConfig chat);

  const Resources& resources() const { return resources_; }
  FileStore& store() const { return *store_; }
  const ChatConfig& chat_config() const { return chat_; }

  void set_backend_factory(BackendFactory factory) { factory_ = std::move(factory); }
  std::shared_ptr<ChatBackend> backend(const ChatConfig& config) const;

  const DatasetProfile& profile(std::string_view name) const { return resources_.profiles.get(name); }

  // Throws NotFound.
  Dialogue load_dialogue(std::string_view id) const;
  int save_dialogue(const Dialogue& d, std::optional<int> expected_version = std::nullopt);

  // Throws NotFound.
  CorpusRecord load_corpus(std::string_view id) const;
  std::optional<CorpusRecord> find_corpus(std::string_view id) const;
  int save_corpus(const CorpusRecord& c);
  // Adds the dialogue id to the corpus, creating the corpus on first use.
  void add_to_corpus(std::string_view corpus_id, std::string_view profile, std::string_view dialogue_id);
  std::vector<Dialogue> corpus_dialogues(const CorpusRecord& c) const;

 private:
  Resources resources_;
  std::shared_ptr<FileStore> store_;
  ChatConfig chat_;
  BackendFactory factory_;
  std::mutex corpus_mu_;
};

nlohmann::json corpus_record_to_json(const CorpusRecord& c);
CorpusRecord corpus_record_from_json(const nlohmann::json& j);

}  // namespace dialab
