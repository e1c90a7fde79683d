// Independent reference implementations used as test oracles. None of these
// call into the library code paths they are compared against.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace enclip::oracle {

/// Epoch-weighted score by direct summation in ascending model order.
inline double weighted_score(const std::vector<bool>& occurrence) {
  double s = 0.0;
  for (std::size_t n = 0; n < occurrence.size(); ++n) {
    if (occurrence[n]) s += 0.1 * std::pow(2.0, static_cast<double>(n));
  }
  return s;
}

struct ListedItem {
  std::string id;
  double similarity;
};

enum class Key { FreqThenWs, WsOnly, FreqTimesWs };

/// Straight-line head-cluster ranking over raw per-model lists. `label` maps
/// (item id, model index) to the cluster of that point.
inline std::vector<std::string> enclip_rank(const std::vector<std::vector<ListedItem>>& lists,
                                            const std::map<std::pair<std::string, int>, int>& label,
                                            std::size_t n, Key key = Key::FreqThenWs) {
  std::vector<std::string> items;
  for (const auto& list : lists) {
    for (const auto& it : list) {
      if (std::find(items.begin(), items.end(), it.id) == items.end()) items.push_back(it.id);
    }
  }
  auto freq = [&](const std::string& id) {
    int f = 0;
    for (const auto& list : lists) {
      for (const auto& it : list) f += it.id == id;
    }
    return f;
  };
  auto ws = [&](const std::string& id) {
    double s = 0.0;
    for (std::size_t m = 0; m < lists.size(); ++m) {
      for (const auto& it : lists[m]) {
        if (it.id == id) s += 0.1 * std::pow(2.0, static_cast<double>(m));
      }
    }
    return s;
  };
  auto best = [&](const std::string& id) {
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& list : lists) {
      for (const auto& it : list) {
        if (it.id == id) b = std::max(b, it.similarity);
      }
    }
    return b;
  };
  auto before = [&](const std::string& a, const std::string& b, Key k) {
    double ka = 0, kb = 0, sa = 0, sb = 0;
    if (k == Key::FreqThenWs) {
      if (freq(a) != freq(b)) return freq(a) > freq(b);
      ka = ws(a);
      kb = ws(b);
    } else if (k == Key::WsOnly) {
      ka = ws(a);
      kb = ws(b);
    } else {
      ka = freq(a) * ws(a);
      kb = freq(b) * ws(b);
    }
    if (ka != kb) return ka > kb;
    sa = best(a);
    sb = best(b);
    if (sa != sb) return sa > sb;
    return a < b;
  };
  auto clusters_of = [&](const std::string& id) {
    std::set<int> c;
    for (std::size_t m = 0; m < lists.size(); ++m) {
      for (const auto& it : lists[m]) {
        if (it.id == id) c.insert(label.at({id, static_cast<int>(m)}));
      }
    }
    return c;
  };

  std::vector<std::string> heads = items;
  std::sort(heads.begin(), heads.end(),
            [&](const std::string& a, const std::string& b) { return before(a, b, Key::FreqThenWs); });

  std::vector<std::string> selected;
  std::size_t i = 0;
  while (selected.size() < n && i < heads.size()) {
    const auto head_clusters = clusters_of(heads[i]);
    std::vector<std::string> batch;
    for (const auto& id : items) {
      for (int c : clusters_of(id)) {
        if (head_clusters.count(c)) {
          batch.push_back(id);
          break;
        }
      }
    }
    std::sort(batch.begin(), batch.end(), [&](const std::string& a, const std::string& b) { return before(a, b, key); });
    for (const auto& id : batch) {
      if (std::find(selected.begin(), selected.end(), id) == selected.end()) selected.push_back(id);
    }
    ++i;
  }
  if (selected.size() > n) selected.resize(n);
  return selected;
}

/// Ids of the k most similar rows by full sort of every similarity.
inline std::vector<std::pair<std::string, double>> exhaustive_topk(const std::vector<std::string>& ids,
                                                                   const std::vector<double>& sims, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t i = 0; i < ids.size(); ++i) all.emplace_back(ids[i], sims[i]);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Average precision recomputing precision@j from scratch at every rank.
inline double average_precision(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                                std::size_t k, bool bounded_denominator) {
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const bool rel = j <= ranked.size() && relevant.count(ranked[j - 1]) > 0;
    if (!rel) continue;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < j && t < ranked.size(); ++t) hits += relevant.count(ranked[t]);
    sum += static_cast<double>(hits) / static_cast<double>(j);
  }
  const double denom = bounded_denominator ? static_cast<double>(std::min(relevant.size(), k))
                                           : static_cast<double>(relevant.size());
  return sum / denom;
}

/// Mean silhouette straight from the definition.
inline double silhouette(const std::vector<std::pair<double, double>>& pts, const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  std::set<int> clusters(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto mean_to = [&](int c, bool exclude_self) {
      double s = 0.0;
      int cnt = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] != c || (exclude_self && j == i)) continue;
        s += std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
        ++cnt;
      }
      return cnt ? s / cnt : 0.0;
    };
    const auto own = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), labels[i]));
    if (own == 1) continue;
    const double a = mean_to(labels[i], true);
    double b = std::numeric_limits<double>::infinity();
    for (int c : clusters) {
      if (c != labels[i]) b = std::min(b, mean_to(c, false));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

/// Minimum-inertia 2-partition by enumerating every labeling.
inline std::vector<int> best_two_partition(const std::vector<std::pair<double, double>>& pts) {
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<int> labels(n);
    double sx[2] = {0, 0}, sy[2] = {0, 0};
    int cnt[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = (mask >> i) & 1u;
      sx[labels[i]] += pts[i].first;
      sy[labels[i]] += pts[i].second;
      ++cnt[labels[i]];
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = sx[labels[i]] / cnt[labels[i]], cy = sy[labels[i]] / cnt[labels[i]];
      cost += (pts[i].first - cx) * (pts[i].first - cx) + (pts[i].second - cy) * (pts[i].second - cy);
    }
    if (cost < best) {
      best = cost;
      best_labels = labels;
    }
  }
  return best_labels;
}

/// Trustworthiness via explicit k-nearest-neighbor sets: every low-dimensional
/// neighbor missing from the high-dimensional k-neighborhood is penalized by
/// how far down the high-dimensional ranking it sits.
inline double trustworthiness(const std::vector<std::vector<double>>& high, const std::vector<std::vector<double>>& low,
                              std::size_t k) {
  const std::size_t n = high.size();
  auto ranking = [&](const std::vector<std::vector<double>>& pts, std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < pts[i].size(); ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
      d.emplace_back(s, j);
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> order;
    for (const auto& [_, j] : d) order.push_back(j);
    return order;
  };
  double penalty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = ranking(high, i);
    const auto l = ranking(low, i);
    const std::set<std::size_t> high_nn(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t r = 0; r < k; ++r) {
      if (high_nn.count(l[r])) continue;
      const auto pos = static_cast<std::size_t>(std::find(h.begin(), h.end(), l[r]) - h.begin()) + 1;
      penalty += static_cast<double>(pos - k);
    }
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace enclip::oracle
