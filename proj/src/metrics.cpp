#include "dialab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "dialab/error.hpp"
#include "dialab/questionnaire.hpp"

namespace dialab {

namespace {

void check_unique_pairs(const TripletSet& triplets, int turn_index, const char* which) {
  if (project_pairs(triplets).size() != triplets.size()) {
    throw Error(ErrorCode::duplicate_pair,
                std::string(which) + " triplets of turn " + std::to_string(turn_index) + " repeat a (domain, slot) pair");
  }
}

void check_inside(const TripletSet& triplets, const PairSet& s, int turn_index) {
  for (const auto& t : triplets) {
    if (!s.contains(t.key())) {
      throw Error(ErrorCode::pair_outside_s, "turn " + std::to_string(turn_index) + ": (" + t.domain + ", " + t.slot +
                                                 ") is not in the slot universe");
    }
  }
}

std::size_t intersection_size(const PairSet& a, const PairSet& b) {
  std::size_t n = 0;
  for (const auto& k : a) n += b.contains(k) ? 1 : 0;
  return n;
}

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs, double mu) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::string fold_label(std::string_view label) {
  std::string s(label);
  // Typographic apostrophe (U+2019) to ASCII.
  for (std::size_t pos; (pos = s.find("\xE2\x80\x99")) != std::string::npos;) s.replace(pos, 3, "'");
  return normalize_value(s);
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::vector<TurnMarks> marks_from_states(std::span<const BeliefState> predicted, std::span<const BeliefState> gold,
                                         std::span<const int> turn_indices) {
  if (predicted.size() != gold.size() || gold.size() != turn_indices.size()) {
    throw Error(ErrorCode::invalid_argument, "predicted, gold and turn index sequences differ in length");
  }
  std::vector<TurnMarks> out;
  out.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto diff = diff_belief(predicted[i], gold[i]);
    TurnMarks m;
    m.turn_index = turn_indices[i];
    m.fn_triplets = std::move(diff.false_negatives);
    m.fp_triplets = std::move(diff.false_positives);
    out.push_back(std::move(m));
  }
  return out;
}

double turn_slot_accuracy(const TurnMarks& m, const PairSet& s) {
  const auto p = project_pairs(m.fn_triplets);
  const auto q = project_pairs(m.fp_triplets);
  const double n = static_cast<double>(s.size());
  const double overlap = static_cast<double>(intersection_size(p, q));
  return (n - static_cast<double>(m.fn_triplets.size()) - static_cast<double>(m.fp_triplets.size()) + overlap) / n;
}

double turn_slot_accuracy_union(const TurnMarks& m, const PairSet& s) {
  auto u = project_pairs(m.fn_triplets);
  u.merge(project_pairs(m.fp_triplets));
  const double n = static_cast<double>(s.size());
  return (n - static_cast<double>(u.size())) / n;
}

double slot_accuracy(std::span<const TurnMarks> marks, const PairSet& s) {
  if (s.empty()) throw Error(ErrorCode::empty_s, "slot universe S is empty");
  if (marks.empty()) throw Error(ErrorCode::empty_marks, "no turn marks");
  double total = 0.0;
  for (const auto& m : marks) {
    check_unique_pairs(m.fn_triplets, m.turn_index, "false negative");
    check_unique_pairs(m.fp_triplets, m.turn_index, "false positive");
    check_inside(m.fn_triplets, s, m.turn_index);
    check_inside(m.fp_triplets, s, m.turn_index);
    total += turn_slot_accuracy(m, s);
  }
  return total / static_cast<double>(marks.size());
}

double joint_goal_accuracy(std::span<const TurnMarks> marks) {
  if (marks.empty()) throw Error(ErrorCode::empty_marks, "no turn marks");
  auto clean = std::count_if(marks.begin(), marks.end(), [](const TurnMarks& m) { return m.clean(); });
  return static_cast<double>(clean) / static_cast<double>(marks.size());
}

std::string_view to_string(AdherenceKind kind) {
  return kind == AdherenceKind::domain ? "domain" : "instruction";
}

double adherence_score(std::span<const TurnMarks> marks, AdherenceKind kind) {
  int scored = 0;
  int total = 0;
  for (const auto& m : marks) {
    if (!m.relevant) continue;
    const auto& v = kind == AdherenceKind::domain ? m.domain_score : m.instruction_score;
    if (!v) continue;
    if (*v != 0 && *v != 1) {
      throw Error(ErrorCode::invalid_argument,
                  "turn " + std::to_string(m.turn_index) + ": adherence score must be 0 or 1");
    }
    ++scored;
    total += *v;
  }
  if (scored == 0) {
    throw Error(ErrorCode::no_relevant_turns, "no relevant turn carries a " + std::string(to_string(kind)) + " score");
  }
  return static_cast<double>(total) / static_cast<double>(scored);
}

std::string_view to_string(SlotScope scope) {
  switch (scope) {
    case SlotScope::schema: return "schema";
    case SlotScope::corpus_gold: return "corpus_gold";
    case SlotScope::dialogue_gold: return "dialogue_gold";
  }
  return "schema";
}

SlotScope parse_slot_scope(std::string_view text) {
  if (text == "schema") return SlotScope::schema;
  if (text == "corpus_gold") return SlotScope::corpus_gold;
  if (text == "dialogue_gold") return SlotScope::dialogue_gold;
  throw Error(ErrorCode::invalid_argument, "unknown slot scope '" + std::string(text) + "'");
}

PairSet slot_universe(SlotScope scope, const AnnotationSchema& schema, std::span<const Dialogue> corpus,
                      const Dialogue& dialogue) {
  if (scope == SlotScope::schema) return schema.all_pairs();
  PairSet out;
  auto collect = [&out](const Dialogue& d) {
    for (const auto* states : {&d.gold_states, &d.predicted_states}) {
      if (!*states) continue;
      for (const auto& s : **states) out.merge(s.pairs());
    }
  };
  if (scope == SlotScope::dialogue_gold) {
    collect(dialogue);
  } else {
    for (const auto& d : corpus) collect(d);
  }
  return out;
}

int likert_to_numeric(std::string_view label) {
  static const int kScores[kQuestionnaireSize] = {-3, -2, -1, 1, 2, 3};
  const std::string folded = fold_label(label);
  for (const char* lang : {"en", "it"}) {
    const auto& options = likert_options(lang);
    for (std::size_t k = 0; k < options.size(); ++k) {
      if (fold_label(options[k]) == folded) return kScores[k];
    }
  }
  throw Error(ErrorCode::unknown_label, "unknown Likert label '" + std::string(label) + "'");
}

void validate_rating(const QualityRating& r) {
  if (r.criterion < 1 || r.criterion > static_cast<int>(kQuestionnaireSize)) {
    throw Error(ErrorCode::invalid_argument, "criterion must be within 1..6, got " + std::to_string(r.criterion));
  }
  likert_to_numeric(r.label);
}

QualityReport aggregate_quality(std::span<const QualityRating> ratings,
                                const std::map<std::string, CellKey>& grouping) {
  if (ratings.empty()) throw Error(ErrorCode::empty_ratings, "no ratings to aggregate");
  std::map<CellKey, CellStat> cells;
  for (const auto& r : ratings) {
    validate_rating(r);
    auto it = grouping.find(r.dialogue_id);
    if (it == grouping.end()) {
      throw Error(ErrorCode::invalid_argument, "rating for unknown dialogue '" + r.dialogue_id + "'");
    }
    auto& cell = cells[it->second];
    cell.sum += likert_to_numeric(r.label);
    cell.count += 1;
  }
  for (auto& [_, cell] : cells) cell.mean = cell.sum / static_cast<double>(cell.count);
  return summarize_cells(std::move(cells));
}

QualityReport summarize_cells(std::map<CellKey, CellStat> cells) {
  QualityReport r;
  r.cells = std::move(cells);
  struct Acc {
    double mean_sum = 0.0;
    double sum = 0.0;
    std::size_t cells = 0;
    std::size_t count = 0;
    void add(const CellStat& c) {
      mean_sum += c.mean;
      sum += c.sum;
      cells += 1;
      count += c.count;
    }
    Marginal done() const {
      Marginal m;
      m.cells = cells;
      m.count = count;
      m.macro = cells ? mean_sum / static_cast<double>(cells) : 0.0;
      m.micro = count ? sum / static_cast<double>(count) : m.macro;
      return m;
    }
  };
  std::map<std::string, Acc> rows, cols;
  Acc grand;
  for (const auto& [key, cell] : r.cells) {
    rows[key.dataset].add(cell);
    cols[key.version].add(cell);
    grand.add(cell);
  }
  for (const auto& [k, a] : rows) r.rows[k] = a.done();
  for (const auto& [k, a] : cols) r.columns[k] = a.done();
  r.grand = grand.done();
  return r;
}

QualityReport marginals_from_cells(const std::map<CellKey, double>& cell_means) {
  std::map<CellKey, CellStat> cells;
  for (const auto& [key, m] : cell_means) cells[key] = CellStat{m, m, 1};
  return summarize_cells(std::move(cells));
}

nlohmann::json quality_report_to_json(const QualityReport& r) {
  auto marginal = [](const Marginal& m) {
    return nlohmann::json{{"macro", m.macro}, {"micro", m.micro}, {"cells", m.cells}, {"count", m.count}};
  };
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [k, c] : r.cells) {
    cells.push_back({{"dataset", k.dataset}, {"version", k.version}, {"mean", c.mean}, {"count", c.count}});
  }
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [k, m] : r.rows) rows[k] = marginal(m);
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [k, m] : r.columns) cols[k] = marginal(m);
  return {{"cells", cells}, {"rows", rows}, {"columns", cols}, {"grand", marginal(r.grand)}};
}

SignificanceResult significance_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::empty_group, "both groups need at least one score");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  // Pool and assign doubled midranks (integers even with ties).
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end());
  std::vector<std::int64_t> rank2(n);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    // Ranks i+1..j, doubled midrank = i+1+j.
    for (std::size_t k = i; k < j; ++k) rank2[k] = static_cast<std::int64_t>(i + 1 + j);
    tie_sizes.push_back(j - i);
    i = j;
  }
  std::int64_t w2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (pooled[k].second == 0) w2 += rank2[k];
  }

  SignificanceResult res;
  res.u = static_cast<double>(w2) / 2.0 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
  // E[2W] = n1 (n + 1).
  const std::int64_t mu2 = static_cast<std::int64_t>(n1 * (n + 1));
  const std::int64_t dev_obs = std::llabs(w2 - mu2);

  if (n1 <= kExactMannWhitneyLimit && n2 <= kExactMannWhitneyLimit) {
    res.exact = true;
    // count[k][s]: subsets of size k from the items seen so far with doubled
    // rank sum s.
    std::int64_t max_sum = 0;
    for (auto r : rank2) max_sum += r;
    std::vector<std::vector<double>> count(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    count[0][0] = 1.0;
    for (std::size_t item = 0; item < n; ++item) {
      const auto r = static_cast<std::size_t>(rank2[item]);
      for (std::size_t k = std::min(item + 1, n1); k >= 1; --k) {
        auto& dst = count[k];
        const auto& src = count[k - 1];
        for (std::size_t s = static_cast<std::size_t>(max_sum); s >= r; --s) {
          if (src[s - r] != 0.0) dst[s] += src[s - r];
          if (s == r) break;
        }
      }
    }
    double total = 0.0;
    double extreme = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(max_sum); ++s) {
      const double c = count[n1][s];
      if (c == 0.0) continue;
      total += c;
      if (std::llabs(static_cast<std::int64_t>(s) - mu2) >= dev_obs) extreme += c;
    }
    res.p_value = std::min(1.0, extreme / total);
  } else {
    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    const double dn = static_cast<double>(n);
    double tie_term = 0.0;
    for (auto t : tie_sizes) {
      const double dt = static_cast<double>(t);
      tie_term += dt * dt * dt - dt;
    }
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    const double dev = static_cast<double>(dev_obs) / 2.0;
    if (var <= 0.0) {
      res.p_value = 1.0;
    } else {
      const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
      res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
  }
  res.significant = res.p_value < 0.05;
  return res;
}

StabilityRun make_stability_run(int run_index, double sa, double jga) {
  return StabilityRun{run_index, sa, jga, jga == 1.0};
}

StabilityReport stability_report(std::span<const StabilityRun> runs) {
  if (runs.empty()) throw Error(ErrorCode::empty_runs, "no stability runs");
  StabilityReport r;
  std::vector<double> sa, jga;
  for (const auto& run : runs) {
    if (run.perfect != (run.jga == 1.0)) {
      throw Error(ErrorCode::invalid_argument,
                  "run " + std::to_string(run.run_index) + ": perfect flag disagrees with JGA");
    }
    sa.push_back(run.sa);
    jga.push_back(run.jga);
    r.perfect_count += run.perfect ? 1 : 0;
  }
  r.mean_sa = mean(sa);
  r.mean_jga = mean(jga);
  r.std_sa = population_std(sa, r.mean_sa);
  r.std_jga = population_std(jga, r.mean_jga);
  r.runs.assign(runs.begin(), runs.end());
  return r;
}

nlohmann::json stability_report_to_json(const StabilityReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"run", run.run_index}, {"sa", run.sa}, {"jga", run.jga}, {"perfect", run.perfect}});
  }
  return {{"mean_sa", r.mean_sa}, {"mean_jga", r.mean_jga}, {"std_sa", r.std_sa},
          {"std_jga", r.std_jga}, {"perfect_count", r.perfect_count}, {"runs", runs}};
}

std::vector<EvaluationRow> evaluation_table(std::span<const DialogueScores> scores) {
  struct Acc {
    std::size_t dialogues = 0;
    std::vector<double> sa, jga, dom, ins;
  };
  std::map<std::pair<std::string, int>, Acc> groups;
  bool any = false;
  for (const auto& s : scores) {
    auto& g = groups[{s.dataset, static_cast<int>(s.mode)}];
    g.dialogues += 1;
    if (s.sa) g.sa.push_back(*s.sa);
    if (s.jga) g.jga.push_back(*s.jga);
    if (s.domain_adherence) g.dom.push_back(*s.domain_adherence);
    if (s.instruction_adherence) g.ins.push_back(*s.instruction_adherence);
    any = any || s.sa || s.jga || s.domain_adherence || s.instruction_adherence;
  }
  if (!any) throw Error(ErrorCode::no_marks, "no dialogue carries marks or gold states");
  auto avg = [](const std::vector<double>& xs) -> std::optional<double> {
    if (xs.empty()) return std::nullopt;
    return mean(xs);
  };
  std::vector<EvaluationRow> rows;
  for (const auto& [key, g] : groups) {
    EvaluationRow row;
    row.dataset = key.first;
    row.mode = static_cast<DialogueMode>(key.second);
    row.dialogues = g.dialogues;
    row.sa = avg(g.sa);
    row.jga = avg(g.jga);
    row.domain_adherence = avg(g.dom);
    row.instruction_adherence = avg(g.ins);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json dialogue_scores_to_json(const DialogueScores& s) {
  return {{"dialogue_id", s.dialogue_id},
          {"dataset", s.dataset},
          {"mode", to_string(s.mode)},
          {"sa", optional_number(s.sa)},
          {"jga", optional_number(s.jga)},
          {"domain_adherence", optional_number(s.domain_adherence)},
          {"instruction_adherence", optional_number(s.instruction_adherence)}};
}

nlohmann::json evaluation_table_to_json(std::span<const EvaluationRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"dataset", r.dataset},
                   {"mode", to_string(r.mode)},
                   {"dialogues", r.dialogues},
                   {"sa", optional_number(r.sa)},
                   {"jga", optional_number(r.jga)},
                   {"domain_adherence", optional_number(r.domain_adherence)},
                   {"instruction_adherence", optional_number(r.instruction_adherence)}});
  }
  return out;
}

}  // namespace dialab
