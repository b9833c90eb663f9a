#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dnsabuse/classifier.hpp"

namespace oracle {

// Edit distance straight from the recursive definition, memoized on suffix
// positions. Shares no code with the row-rolling implementation.
inline size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto rec = [&](auto&& self, size_t i, size_t j) -> size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    if (memo[i][j] >= 0) return static_cast<size_t>(memo[i][j]);
    size_t best;
    if (a[i] == b[j]) {
      best = self(self, i + 1, j + 1);
    } else {
      best = 1 + std::min({self(self, i + 1, j), self(self, i, j + 1), self(self, i + 1, j + 1)});
    }
    memo[i][j] = static_cast<long>(best);
    return best;
  };
  return rec(rec, 0, 0);
}

// Pairwise edges + depth-first component search, bucketed by calendar day
// arithmetic on raw epoch seconds.
inline std::set<std::set<std::string>> bulk_components(const std::vector<dnsabuse::classifier::RegistrationLogEntry>& log,
                                                       long window_seconds, size_t max_dist, size_t min_size) {
  std::map<std::pair<std::string, long>, std::set<std::string>> buckets;
  for (const auto& e : log) {
    const long t = e.registered_at.time_since_epoch().count();
    long w = t / window_seconds;
    if (t % window_seconds < 0) --w;
    buckets[{e.registrar, w}].insert(e.registrable);
  }
  std::set<std::set<std::string>> out;
  for (const auto& [key, set] : buckets) {
    std::vector<std::string> v(set.begin(), set.end());
    const size_t n = v.size();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        adj[i][j] = i != j && edit_distance(v[i].substr(0, v[i].find('.')), v[j].substr(0, v[j].find('.'))) <= max_dist;
      }
    }
    std::vector<bool> seen(n, false);
    for (size_t s = 0; s < n; ++s) {
      if (seen[s]) continue;
      std::set<std::string> comp;
      std::vector<size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        const size_t u = stack.back();
        stack.pop_back();
        comp.insert(v[u]);
        for (size_t x = 0; x < n; ++x) {
          if (adj[u][x] && !seen[x]) {
            seen[x] = true;
            stack.push_back(x);
          }
        }
      }
      if (comp.size() >= min_size) out.insert(comp);
    }
  }
  return out;
}

// Plain scan of every dictionary word against the stripped label.
inline bool random_looking(const std::string& label, const std::vector<std::string>& words, size_t min_len) {
  std::string letters;
  for (char c : label) {
    if (c != '-' && !(c >= '0' && c <= '9')) letters += c;
  }
  for (const auto& w : words) {
    if (w.size() >= min_len && letters.find(w) != std::string::npos) return false;
  }
  return true;
}

}  // namespace oracle
