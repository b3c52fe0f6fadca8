#pragma once

// Random inputs shared by the tests and the acceptance run.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "dialab/metrics.hpp"
#include "dialab/model.hpp"
#include "oracles.hpp"

namespace gen {

using namespace dialab;

struct Instance {
  std::vector<oracle::Pair> s;
  std::vector<oracle::Turn> turns;
};

// |S| <= 6, <= 5 turns, FN and FP each with unique pairs drawn from S.
inline Instance random_instance(std::mt19937& rng) {
  static const char* kDomains[] = {"restaurant", "train", "hotel"};
  static const char* kSlots[] = {"food", "area", "day", "time"};
  std::vector<oracle::Pair> pool;
  for (auto* d : kDomains)
    for (auto* s : kSlots) pool.push_back({d, s});
  std::shuffle(pool.begin(), pool.end(), rng);
  Instance inst;
  const int s_size = std::uniform_int_distribution<int>(1, 6)(rng);
  inst.s.assign(pool.begin(), pool.begin() + s_size);
  const int n_turns = std::uniform_int_distribution<int>(1, 5)(rng);
  std::bernoulli_distribution pick(0.3);
  std::uniform_int_distribution<int> value(0, 2);
  for (int t = 0; t < n_turns; ++t) {
    oracle::Turn turn;
    for (const auto& p : inst.s) {
      if (pick(rng)) turn.fn.push_back({p.domain, p.slot, "v" + std::to_string(value(rng))});
      if (pick(rng)) turn.fp.push_back({p.domain, p.slot, "w" + std::to_string(value(rng))});
    }
    inst.turns.push_back(std::move(turn));
  }
  return inst;
}

inline PairSet to_pairs(const std::vector<oracle::Pair>& s) {
  PairSet out;
  for (const auto& p : s) out.insert({p.domain, p.slot});
  return out;
}

inline std::vector<TurnMarks> to_marks(const std::vector<oracle::Turn>& turns) {
  std::vector<TurnMarks> out;
  int index = 1;
  for (const auto& t : turns) {
    TurnMarks m;
    m.turn_index = index;
    index += 2;
    for (const auto& i : t.fn) m.fn_triplets.insert(make_triplet(i.domain, i.slot, i.value));
    for (const auto& i : t.fp) m.fp_triplets.insert(make_triplet(i.domain, i.slot, i.value));
    out.push_back(std::move(m));
  }
  return out;
}

inline std::string random_sentence(std::mt19937& rng) {
  static const char* kWords[] = {"I",     "would", "like",  "a",      "table", "for",   "five",  "at",
                                 "10:30", "on",    "Sunday", "please", "the",   "cheap", "centre", "Italian",
                                 "food",  "is",    "great", "ok,",    "thanks", "number", "MBC9E6AL", "(yes)"};
  std::uniform_int_distribution<int> len(1, 14), word(0, std::size(kWords) - 1);
  std::string out;
  for (int i = 0, n = len(rng); i < n; ++i) {
    if (i) out += ' ';
    out += kWords[word(rng)];
  }
  static const char* kEnds[] = {".", "?", "!", ""};
  return out + kEnds[std::uniform_int_distribution<int>(0, 3)(rng)];
}

inline Dialogue random_dialogue(std::mt19937& rng, int k) {
  Dialogue d;
  d.id = "rt-" + std::to_string(k);
  d.profile = "multiwoz";
  d.mode = DialogueMode::one_shot;
  const int n = std::uniform_int_distribution<int>(1, 12)(rng);
  for (int i = 0; i < n; ++i) {
    std::string text = random_sentence(rng);
    if (std::bernoulli_distribution(0.2)(rng)) text += "\n" + random_sentence(rng);
    d.turns.push_back({i + 1, i % 2 == 0 ? "user" : "system", text, "en"});
  }
  return d;
}
}  // namespace gen
