// dialab: batch driver for the generation, annotation and evaluation pipeline.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dialab/corpus_io.hpp"
#include "dialab/error.hpp"
#include "dialab/metrics.hpp"
#include "dialab/pipeline.hpp"
#include "dialab/questionnaire.hpp"
#include "dialab/resources.hpp"
#include "dialab/review_service.hpp"
#include "dialab/workbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dialab;

namespace {

struct GlobalFlags {
  std::string backend = "replay";
  std::string fixtures_dir;
  std::string data_dir = "data";
  std::string share_dir;
  std::string model;
  std::optional<double> temperature;
  std::string endpoint;
};

Workbench make_workbench(const GlobalFlags& g) {
  const fs::path share = g.share_dir.empty() ? default_share_dir() : fs::path(g.share_dir);
  ChatConfig chat;
  chat.backend = parse_backend(g.backend);
  chat.fixtures_dir = g.fixtures_dir.empty() ? share / "fixtures" : fs::path(g.fixtures_dir);
  if (!g.model.empty()) chat.model = g.model;
  if (g.temperature) chat.temperature = *g.temperature;
  if (!g.endpoint.empty()) chat.endpoint = g.endpoint;
  return Workbench(load_resources(share), std::make_shared<FileStore>(g.data_dir), chat);
}

std::optional<std::string> read_optional(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_file(path);
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue generation, annotation and evaluation workbench"};
  app.set_config("--config", "", "INI/TOML file with default flag values");
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--backend", g.backend, "live, replay or record")->capture_default_str();
  app.add_option("--fixtures-dir", g.fixtures_dir, "Record/replay fixture directory (default: <share>/fixtures)");
  app.add_option("--data-dir", g.data_dir, "Record store directory")->capture_default_str();
  app.add_option("--share-dir", g.share_dir, "Profiles, templates and knowledge bases");
  app.add_option("--model", g.model, "Model name for the live backend");
  app.add_option("--temperature", g.temperature, "Sampling temperature for the live backend");
  app.add_option("--endpoint", g.endpoint, "Chat-completion endpoint URL");

  std::string profile, mode = "one_shot", kb, instructions_file, corpus_id, gold_file, scope = "schema";
  std::string lang = "en", format = "json", dialogue_id, input, ingest_format = "multiwoz", ratings_file;
  std::string host = "127.0.0.1";
  int n = 1;
  int port = 8080;

  auto* gen = app.add_subcommand("generate", "Generate dialogues from a prompt template");
  gen->add_option("--profile", profile, "Dataset profile")->required();
  gen->add_option("--mode", mode, "Generation mode")->capture_default_str();
  gen->add_option("--kb", kb, "Knowledge base reference");
  gen->add_option("--instructions-file", instructions_file, "User instructions / goal text");
  gen->add_option("--n", n, "Number of dialogues")->capture_default_str();
  gen->add_option("--corpus-id", corpus_id, "Corpus id (derived from the inputs by default)");

  auto* ann = app.add_subcommand("annotate", "Annotate every dialogue of a corpus");
  ann->add_option("--corpus", corpus_id, "Corpus id")->required();

  auto* ev = app.add_subcommand("evaluate", "Score a corpus (slot accuracy, JGA, adherence)");
  ev->add_option("--corpus", corpus_id, "Corpus id")->required();
  ev->add_option("--gold", gold_file, "Gold states file");
  ev->add_option("--scope", scope, "Slot universe: schema, corpus_gold or dialogue_gold")->capture_default_str();

  auto* st = app.add_subcommand("stability", "Repeat one prompt and report annotation stability");
  st->add_option("--profile", profile, "Dataset profile")->required();
  st->add_option("--kb", kb, "Knowledge base reference");
  st->add_option("--instructions-file", instructions_file, "User instructions / goal text")->required();
  st->add_option("--gold", gold_file, "Gold states file")->required();
  auto* st_n = st->add_option("--n", n, "Number of runs");

  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  auto* qn = app.add_subcommand("questionnaire", "Export the quality questionnaire for a dialogue");
  qn->add_option("--dialogue", dialogue_id, "Dialogue id")->required();
  qn->add_option("--lang", lang, "en or it")->capture_default_str();
  qn->add_option("--format", format, "json or csv")->capture_default_str();

  auto* ing = app.add_subcommand("ingest", "Import a reference corpus");
  ing->add_option("--profile", profile, "Dataset profile")->required();
  ing->add_option("--input", input, "Input file")->required();
  ing->add_option("--format", ingest_format, "multiwoz (text layout) or jsonl")->capture_default_str();
  ing->add_option("--corpus-id", corpus_id, "Corpus id")->required();

  auto* ql = app.add_subcommand("quality", "Aggregate questionnaire ratings per dataset and mode");
  ql->add_option("--ratings", ratings_file, "JSON lines {dialogue_id, criterion, label, rater_id}")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Workbench wb = make_workbench(g);

    if (*gen) {
      GenerateOptions opts;
      opts.profile = profile;
      opts.mode = parse_mode(mode);
      if (!kb.empty()) opts.kb_ref = kb;
      opts.instructions = read_optional(instructions_file);
      opts.n = n;
      if (!corpus_id.empty()) opts.corpus_id = corpus_id;
      print(generate_result_to_json(cmd_generate(wb, opts)));
    } else if (*ann) {
      auto r = cmd_annotate(wb, corpus_id);
      print(annotate_result_to_json(r));
      return r.failed.empty() ? 0 : 3;
    } else if (*ev) {
      EvaluateOptions opts;
      opts.scope = parse_slot_scope(scope);
      if (!gold_file.empty()) {
        const auto corpus = wb.load_corpus(corpus_id);
        opts.gold = load_gold(gold_file, wb.profile(corpus.profile));
      }
      print(evaluation_report_to_json(cmd_evaluate(wb, corpus_id, opts)));
    } else if (*st) {
      StabilityOptions opts;
      opts.profile = profile;
      if (!kb.empty()) opts.kb_ref = kb;
      opts.instructions = read_optional(instructions_file);
      opts.n = st_n->count() ? n : 10;
      opts.gold = load_gold(gold_file, wb.profile(profile));
      print(stability_result_to_json(cmd_stability(wb, opts)));
    } else if (*serve) {
      ReviewService service(wb);
      httplib::Server server;
      service.install_routes(server);
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw Error(ErrorCode::transport_error, "cannot listen on port " + std::to_string(port));
    } else if (*qn) {
      auto q = export_questionnaire(wb.load_dialogue(dialogue_id), lang);
      if (format == "csv") {
        std::cout << questionnaire_to_csv(q);
      } else {
        print(questionnaire_to_json(q));
      }
    } else if (*ing) {
      const auto& p = wb.profile(profile);
      const auto text = read_file(input);
      Corpus corpus;
      json issues = json::array();
      if (ingest_format == "multiwoz") {
        corpus = ingest_multiwoz(text, p, corpus_id);
      } else if (ingest_format == "jsonl") {
        auto report = ingest_generic(text, p, corpus_id);
        corpus = std::move(report.corpus);
        for (const auto& i : report.issues) issues.push_back({{"line", i.line}, {"code", i.code}, {"message", i.message}});
      } else {
        throw Error(ErrorCode::usage_error, "unknown ingest format '" + ingest_format + "'");
      }
      CorpusRecord rec{corpus.id, p.name, {}, {{"source", fs::path(input).filename().string()}}};
      for (const auto& d : corpus.dialogues) {
        wb.save_dialogue(d);
        rec.dialogues.push_back(d.id);
      }
      wb.save_corpus(rec);
      print({{"corpus_id", rec.id}, {"dialogues", rec.dialogues}, {"issues", issues}});
    } else if (*ql) {
      std::vector<QualityRating> ratings;
      std::map<std::string, CellKey> grouping;
      const auto text = read_file(ratings_file);
      std::size_t start = 0;
      while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = json::parse(line);
        QualityRating r{j.at("dialogue_id").get<std::string>(), j.at("criterion").get<int>(),
                        j.at("label").get<std::string>(), j.value("rater_id", "")};
        if (!grouping.contains(r.dialogue_id)) {
          const auto d = wb.load_dialogue(r.dialogue_id);
          grouping[r.dialogue_id] = CellKey{d.profile, std::string(to_string(d.mode))};
        }
        ratings.push_back(std::move(r));
      }
      print(quality_report_to_json(aggregate_quality(ratings, grouping)));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::usage_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
