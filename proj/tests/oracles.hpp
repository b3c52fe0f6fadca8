#pragma once

// Reference implementations written independently of the library: plain
// enumeration over vectors, no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

struct Item {
  std::string domain, slot, value;
};

struct Turn {
  std::vector<Item> fn, fp;
};

struct Pair {
  std::string domain, slot;
};

inline bool touches(const std::vector<Item>& items, const Pair& p) {
  for (const auto& i : items) {
    if (i.domain == p.domain && i.slot == p.slot) return true;
  }
  return false;
}

// A pair of S counts as correct when neither a false negative nor a false
// positive mentions it.
inline double slot_accuracy(const std::vector<Turn>& turns, const std::vector<Pair>& s) {
  double total = 0.0;
  for (const auto& t : turns) {
    std::size_t correct = 0;
    for (const auto& p : s) {
      if (!touches(t.fn, p) && !touches(t.fp, p)) ++correct;
    }
    total += static_cast<double>(correct) / static_cast<double>(s.size());
  }
  return total / static_cast<double>(turns.size());
}

inline double joint_goal_accuracy(const std::vector<Turn>& turns) {
  std::size_t clean = 0;
  for (const auto& t : turns) clean += (t.fn.empty() && t.fp.empty());
  return static_cast<double>(clean) / static_cast<double>(turns.size());
}

// U of group A by direct pair counting.
inline double mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

// Two-sided p over every relabelling of the pooled sample into groups of the
// original sizes.
inline double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const double centre = static_cast<double>(a.size() * b.size()) / 2.0;
  const double observed = std::fabs(mann_whitney_u(a, b) - centre);
  std::size_t extreme = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
    std::vector<double> ga, gb;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? ga : gb).push_back(pooled[i]);
    ++total;
    if (std::fabs(mann_whitney_u(ga, gb) - centre) >= observed - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace oracle
