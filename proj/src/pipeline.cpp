#include "dialab/pipeline.hpp"

#include "dialab/digest.hpp"
#include "dialab/error.hpp"
#include "dialab/prompt.hpp"
#include "dialab/review.hpp"

namespace dialab {

using nlohmann::json;

namespace {

std::string short_digest(const json& j) { return sha256_hex(j.dump()).substr(0, 12); }

json prompt_to_json(const Prompt& p) {
  return {{"text", p.text}, {"template_id", p.template_id}, {"bound_values", p.bound_values}};
}

json warnings_to_json(const std::vector<DialogueWarnings>& all) {
  json out = json::array();
  for (const auto& dw : all) {
    json ws = json::array();
    for (const auto& w : dw.warnings) ws.push_back(parse_warning_to_json(w));
    out.push_back({{"dialogue_id", dw.dialogue_id}, {"warnings", ws}});
  }
  return out;
}

std::string send_once(Workbench& wb, const std::string& session_id, int sample, const std::string& prompt) {
  ChatConfig cfg = wb.chat_config();
  cfg.sample = sample;
  ChatSession session(session_id, wb.backend(cfg), cfg);
  return session.send(prompt);
}

// Latest submitted review of each kind.
std::map<ReviewKind, ReviewTask> latest_reviews(const Workbench& wb, const std::string& dialogue_id) {
  std::map<ReviewKind, ReviewTask> out;
  for (auto& t : submitted_reviews(wb, dialogue_id)) out.insert_or_assign(t.kind, std::move(t));
  return out;
}

std::vector<int> user_turn_indices(const Dialogue& d) {
  std::vector<int> out;
  for (auto pos : d.user_turn_positions()) out.push_back(d.turns[pos].index);
  return out;
}

}  // namespace

json parse_warning_to_json(const ParseWarning& w) {
  return {{"line", w.line}, {"code", w.code}, {"snippet", w.snippet}};
}

GenerateResult cmd_generate(Workbench& wb, const GenerateOptions& opts) {
  if (opts.n < 1) throw Error(ErrorCode::usage_error, "--n must be at least 1");
  if (opts.mode == DialogueMode::reference) {
    throw Error(ErrorCode::usage_error, "reference dialogues are ingested, not generated");
  }
  if (opts.mode == DialogueMode::interactive) {
    throw Error(ErrorCode::usage_error, "interactive dialogues are collected through the review service");
  }
  if (!opts.instructions || opts.instructions->empty()) {
    throw Error(ErrorCode::usage_error, "one-shot generation needs user instructions (--instructions-file)");
  }
  const auto& res = wb.resources();
  const auto& profile = res.profiles.get(opts.profile);
  const DomainKB* kb = opts.kb_ref ? &res.kb(*opts.kb_ref) : nullptr;
  const Prompt prompt = build_generation_prompt(res.templates, profile, opts.mode, kb, opts.instructions);

  const ChatConfig& chat = wb.chat_config();
  json inputs = {{"profile", profile.name},
                 {"mode", to_string(opts.mode)},
                 {"kb_ref", opts.kb_ref ? json(*opts.kb_ref) : json(nullptr)},
                 {"instructions_sha256", sha256_hex(*opts.instructions)},
                 {"n", opts.n},
                 {"first_sample", opts.first_sample},
                 {"model", chat.model},
                 {"temperature", chat.temperature}};

  GenerateResult result;
  result.corpus_id = opts.corpus_id.value_or("gen-" + profile.name + "-" + short_digest(inputs));
  wb.store().put("prompts", result.corpus_id, prompt_to_json(prompt));

  for (int k = 1; k <= opts.n; ++k) {
    const std::string id = result.corpus_id + "-" + std::to_string(k);
    const std::string reply = send_once(wb, id, opts.first_sample + k - 1, prompt.text);
    auto parsed = parse_dialogue(reply, profile);
    if (!parsed.ok()) {
      throw Error(parsed.fatal->code(), "dialogue " + id + ": " + parsed.fatal->what());
    }
    Dialogue d = std::move(*parsed.value);
    d.id = id;
    d.profile = profile.name;
    d.mode = opts.mode;
    d.instructions = opts.instructions;
    d.kb_ref = opts.kb_ref;
    wb.save_dialogue(d);
    result.dialogue_ids.push_back(id);
    if (!parsed.warnings.empty()) result.warnings.push_back({id, parsed.warnings});
  }

  CorpusRecord corpus;
  corpus.id = result.corpus_id;
  corpus.profile = profile.name;
  corpus.dialogues = result.dialogue_ids;
  corpus.metadata = {{"inputs", inputs}, {"template_id", prompt.template_id}, {"chat", config_to_json(chat)}};
  wb.save_corpus(corpus);
  return result;
}

json generate_result_to_json(const GenerateResult& r) {
  return {{"corpus_id", r.corpus_id}, {"dialogues", r.dialogue_ids}, {"warnings", warnings_to_json(r.warnings)}};
}

AnnotateOneResult annotate_dialogue(Workbench& wb, const std::string& dialogue_id, int sample) {
  Dialogue d = wb.load_dialogue(dialogue_id);
  const auto& res = wb.resources();
  const auto& profile = res.profiles.get(d.profile);
  if (!profile.schema) {
    throw Error(ErrorCode::missing_prerequisite, "profile " + profile.name + " has no annotation schema");
  }
  const Prompt prompt = build_annotation_prompt(res.templates, profile, d, res.annotation_example(profile));
  const std::string reply = send_once(wb, dialogue_id + "-annotate", sample, prompt.text);
  auto parsed = parse_annotations(reply, profile, &d);
  if (!parsed.ok()) throw *parsed.fatal;

  std::vector<BeliefState> states;
  for (auto& a : *parsed.value) states.push_back(std::move(a.state));
  d.predicted_states = std::move(states);
  wb.save_dialogue(d);
  return {std::move(d), std::move(parsed.warnings)};
}

AnnotateResult cmd_annotate(Workbench& wb, const std::string& corpus_id) {
  const auto corpus = wb.load_corpus(corpus_id);
  AnnotateResult result;
  result.corpus_id = corpus.id;
  for (const auto& id : corpus.dialogues) {
    try {
      auto one = annotate_dialogue(wb, id);
      result.annotated.push_back(id);
      if (!one.warnings.empty()) result.warnings.push_back({id, std::move(one.warnings)});
    } catch (const Error& e) {
      result.failed.push_back({id, std::string(to_string(e.code())), e.what()});
    }
  }
  return result;
}

json annotate_result_to_json(const AnnotateResult& r) {
  json failed = json::array();
  for (const auto& f : r.failed) failed.push_back({{"dialogue_id", f.dialogue_id}, {"code", f.code}, {"message", f.message}});
  return {{"corpus_id", r.corpus_id},
          {"annotated", r.annotated},
          {"failed", failed},
          {"warnings", warnings_to_json(r.warnings)}};
}

const std::vector<BeliefState>* GoldFile::for_dialogue(const std::string& id) const {
  if (auto it = dialogues.find(id); it != dialogues.end()) return &it->second;
  return fallback ? &*fallback : nullptr;
}

const std::vector<BeliefState>* GoldFile::for_run(int run, const std::string& id) const {
  if (run >= 1 && static_cast<std::size_t>(run) <= runs.size()) return &runs[static_cast<std::size_t>(run - 1)];
  return for_dialogue(id);
}

GoldFile gold_from_json(const json& j, const DatasetProfile& profile) {
  auto states = [&profile](const json& arr) {
    if (!arr.is_array()) throw Error(ErrorCode::format_error, "gold states must be an array");
    std::vector<BeliefState> out;
    for (const auto& s : arr) out.push_back(state_from_json(s, profile));
    return out;
  };
  GoldFile g;
  if (!j.is_object()) throw Error(ErrorCode::format_error, "gold file must be a JSON object");
  if (j.contains("default")) g.fallback = states(j.at("default"));
  if (j.contains("dialogues")) {
    for (const auto& [id, arr] : j.at("dialogues").items()) g.dialogues[id] = states(arr);
  }
  if (j.contains("runs")) {
    for (const auto& arr : j.at("runs")) g.runs.push_back(states(arr));
  }
  if (!g.fallback && g.dialogues.empty() && g.runs.empty()) throw Error(ErrorCode::format_error, "gold file holds no states");
  return g;
}

GoldFile load_gold(const std::filesystem::path& path, const DatasetProfile& profile) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
  }
  return gold_from_json(j, profile);
}

EvaluationReport cmd_evaluate(Workbench& wb, const std::string& corpus_id, const EvaluateOptions& opts) {
  const auto corpus = wb.load_corpus(corpus_id);
  std::vector<Dialogue> dialogues = wb.corpus_dialogues(corpus);
  if (opts.gold) {
    for (auto& d : dialogues) {
      if (d.gold_states) continue;
      if (const auto* g = opts.gold->for_dialogue(d.id)) d.gold_states = *g;
    }
  }

  EvaluationReport report;
  report.corpus_id = corpus.id;
  report.scope = opts.scope;
  for (const auto& d : dialogues) {
    const auto& profile = wb.profile(d.profile);
    DialogueScores s;
    s.dialogue_id = d.id;
    s.dataset = profile.name;
    s.mode = d.mode;
    const auto reviews = latest_reviews(wb, d.id);

    if (profile.schema) {
      std::optional<std::vector<TurnMarks>> marks;
      if (auto it = reviews.find(ReviewKind::annotation); it != reviews.end()) {
        marks = it->second.marks;
      } else if (d.gold_states && d.predicted_states) {
        if (d.gold_states->size() != d.predicted_states->size()) {
          throw Error(ErrorCode::format_error, "dialogue " + d.id + ": " + std::to_string(d.gold_states->size()) +
                                                   " gold states vs " + std::to_string(d.predicted_states->size()) +
                                                   " predicted");
        }
        marks = marks_from_states(*d.predicted_states, *d.gold_states, user_turn_indices(d));
      }
      if (marks && !marks->empty()) {
        const auto universe = slot_universe(opts.scope, *profile.schema, dialogues, d);
        s.sa = slot_accuracy(*marks, universe);
        s.jga = joint_goal_accuracy(*marks);
      }
    }
    if (auto it = reviews.find(ReviewKind::domain_adherence); it != reviews.end()) {
      s.domain_adherence = adherence_score(it->second.marks, AdherenceKind::domain);
    }
    if (auto it = reviews.find(ReviewKind::instruction_adherence); it != reviews.end()) {
      s.instruction_adherence = adherence_score(it->second.marks, AdherenceKind::instruction);
    }
    report.dialogues.push_back(std::move(s));
  }
  report.rows = evaluation_table(report.dialogues);
  return report;
}

json evaluation_report_to_json(const EvaluationReport& r) {
  json dialogues = json::array();
  for (const auto& d : r.dialogues) dialogues.push_back(dialogue_scores_to_json(d));
  return {{"corpus_id", r.corpus_id},
          {"slot_scope", to_string(r.scope)},
          {"rows", evaluation_table_to_json(r.rows)},
          {"dialogues", dialogues}};
}

StabilityResult cmd_stability(Workbench& wb, const StabilityOptions& opts) {
  if (opts.n < 1) throw Error(ErrorCode::usage_error, "--n must be at least 1");
  const auto& profile = wb.profile(opts.profile);

  GenerateOptions gen;
  gen.profile = opts.profile;
  gen.mode = DialogueMode::one_shot;
  gen.kb_ref = opts.kb_ref;
  gen.instructions = opts.instructions;
  gen.n = opts.n;
  gen.first_sample = 1;
  json inputs = {{"profile", profile.name},
                 {"kb_ref", opts.kb_ref ? json(*opts.kb_ref) : json(nullptr)},
                 {"instructions_sha256", sha256_hex(opts.instructions.value_or(""))},
                 {"n", opts.n}};
  gen.corpus_id = "stab-" + profile.name + "-" + short_digest(inputs);
  const auto generated = cmd_generate(wb, gen);

  StabilityResult result;
  result.corpus_id = generated.corpus_id;
  std::vector<StabilityRun> runs;
  for (int k = 1; k <= opts.n; ++k) {
    const auto& id = generated.dialogue_ids[static_cast<std::size_t>(k - 1)];
    auto annotated = annotate_dialogue(wb, id, k);
    const auto* gold = opts.gold.for_run(k, id);
    if (!gold) throw Error(ErrorCode::no_marks, "no gold states for stability run " + std::to_string(k));
    if (gold->size() != annotated.dialogue.predicted_states->size()) {
      throw Error(ErrorCode::format_error, "run " + std::to_string(k) + ": gold has " + std::to_string(gold->size()) +
                                               " states, dialogue has " +
                                               std::to_string(annotated.dialogue.predicted_states->size()) +
                                               " user turns");
    }
    const auto marks =
        marks_from_states(*annotated.dialogue.predicted_states, *gold, user_turn_indices(annotated.dialogue));
    const auto& schema = profile.require_schema();
    runs.push_back(make_stability_run(k, slot_accuracy(marks, schema.all_pairs()), joint_goal_accuracy(marks)));
  }
  result.report = stability_report(runs);
  wb.store().put("reports", result.corpus_id, stability_result_to_json(result));
  return result;
}

json stability_result_to_json(const StabilityResult& r) {
  json j = stability_report_to_json(r.report);
  j["corpus_id"] = r.corpus_id;
  return j;
}

}  // namespace dialab
