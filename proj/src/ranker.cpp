#include "enclip/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace enclip::ranker {

std::string_view to_string(RankingVariant variant) {
  switch (variant) {
    case RankingVariant::FreqThenWs: return "freq_then_ws";
    case RankingVariant::WsOnly: return "ws_only";
    case RankingVariant::FreqTimesWs: return "freq_times_ws";
  }
  return "freq_then_ws";
}

RankingVariant parse_variant(std::string_view name) {
  if (name == "freq_then_ws") return RankingVariant::FreqThenWs;
  if (name == "ws_only") return RankingVariant::WsOnly;
  if (name == "freq_times_ws") return RankingVariant::FreqTimesWs;
  throw RankerError("unknown comparator '" + std::string(name) +
                    "' (expected freq_then_ws, ws_only or freq_times_ws)");
}

double weighted_score(const std::vector<bool>& occurrence) {
  double score = 0.0;
  for (std::size_t n = 0; n < occurrence.size(); ++n) {
    if (occurrence[n]) score += 0.1 * std::ldexp(1.0, static_cast<int>(n));
  }
  return score;
}

std::optional<std::size_t> CandidatePool::find(const std::string& item_id) const {
  const auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const CandidateEntry& CandidatePool::entry(const std::string& item_id) const {
  const auto idx = find(item_id);
  if (!idx) throw RankerError("item not in pool: " + item_id);
  return entries_[*idx];
}

std::vector<float> CandidatePool::point_matrix() const {
  std::vector<float> out;
  out.reserve(points_.size() * dim_);
  for (const auto& p : points_) out.insert(out.end(), p.embedding.begin(), p.embedding.end());
  return out;
}

CandidatePool build_candidate_pool(const std::vector<search::HitList>& hit_lists, const corpus::ModelSet& set) {
  if (hit_lists.size() != set.z()) {
    throw RankerError("expected " + std::to_string(set.z()) + " hit lists, got " +
                      std::to_string(hit_lists.size()));
  }
  CandidatePool pool;
  pool.z_ = set.z();
  pool.dim_ = set.dim();
  pool.models_ = set;

  struct Occurrence {
    std::size_t model_index;
    std::size_t row;
    double similarity;
  };
  std::vector<std::vector<Occurrence>> occurrences;

  for (std::size_t n = 0; n < hit_lists.size(); ++n) {
    const auto& matrix = set.model(n);
    for (const auto& hit : hit_lists[n]) {
      const auto row = matrix.find(hit.item_id);
      if (!row) throw RankerError("hit " + hit.item_id + " is not in model " + matrix.model_id());
      auto [it, inserted] = pool.index_.emplace(hit.item_id, pool.entries_.size());
      if (inserted) {
        CandidateEntry e;
        e.item_id = hit.item_id;
        e.occurrence.assign(set.z(), false);
        pool.entries_.push_back(std::move(e));
        occurrences.emplace_back();
      }
      auto& entry = pool.entries_[it->second];
      if (entry.occurrence[n]) {
        throw RankerError("item " + hit.item_id + " listed twice by model " + matrix.model_id());
      }
      entry.occurrence[n] = true;
      occurrences[it->second].push_back({n, *row, hit.similarity});
    }
  }
  if (pool.entries_.empty()) throw RankerError("empty pool");

  for (std::size_t e = 0; e < pool.entries_.size(); ++e) {
    auto& entry = pool.entries_[e];
    entry.frequency = static_cast<int>(occurrences[e].size());
    entry.weighted_score = weighted_score(entry.occurrence);
    entry.best_similarity = occurrences[e].front().similarity;
    for (const auto& occ : occurrences[e]) {
      entry.best_similarity = std::max(entry.best_similarity, occ.similarity);
      entry.points.push_back(pool.points_.size());
      pool.points_.push_back({e, occ.model_index, occ.row, occ.similarity, set.model(occ.model_index).row(occ.row)});
    }
  }
  return pool;
}

bool rank_before(const CandidateEntry& a, const CandidateEntry& b, RankingVariant variant) {
  switch (variant) {
    case RankingVariant::FreqThenWs:
      if (a.frequency != b.frequency) return a.frequency > b.frequency;
      if (a.weighted_score != b.weighted_score) return a.weighted_score > b.weighted_score;
      break;
    case RankingVariant::WsOnly:
      if (a.weighted_score != b.weighted_score) return a.weighted_score > b.weighted_score;
      break;
    case RankingVariant::FreqTimesWs: {
      const double ka = a.frequency * a.weighted_score;
      const double kb = b.frequency * b.weighted_score;
      if (ka != kb) return ka > kb;
      break;
    }
  }
  if (a.best_similarity != b.best_similarity) return a.best_similarity > b.best_similarity;
  return a.item_id < b.item_id;
}

namespace {

std::vector<std::size_t> head_order(const CandidatePool& pool) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto& entries = pool.entries();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rank_before(entries[a], entries[b], RankingVariant::FreqThenWs);
  });
  return order;
}

}  // namespace

std::vector<std::string> select_heads(const CandidatePool& pool) {
  std::vector<std::string> heads;
  heads.reserve(pool.size());
  for (auto e : head_order(pool)) heads.push_back(pool.entries()[e].item_id);
  return heads;
}

RankedResult enclip_rank(const CandidatePool& pool, std::span<const int> labels, std::size_t n,
                         RankingVariant variant) {
  if (n == 0) throw RankerError("N must be positive");
  const auto& points = pool.all_points();
  const auto& entries = pool.entries();
  if (labels.size() != points.size()) {
    throw RankerError("got " + std::to_string(labels.size()) + " cluster labels for " +
                      std::to_string(points.size()) + " pool points");
  }

  RankedResult result;
  std::unordered_set<std::size_t> selected;
  std::vector<std::size_t> order;

  for (const auto head : head_order(pool)) {
    if (order.size() >= n) break;
    HeadStep step;
    step.head = entries[head].item_id;

    std::set<int> head_clusters;
    for (auto p : entries[head].points) head_clusters.insert(labels[p]);
    step.clusters.assign(head_clusters.begin(), head_clusters.end());

    std::vector<std::size_t> batch;
    std::unordered_set<std::size_t> in_batch;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (head_clusters.count(labels[p]) && in_batch.insert(points[p].entry).second) {
        batch.push_back(points[p].entry);
      }
    }
    std::sort(batch.begin(), batch.end(), [&](std::size_t a, std::size_t b) {
      return rank_before(entries[a], entries[b], variant);
    });
    for (auto e : batch) {
      if (selected.insert(e).second) {
        order.push_back(e);
        ++step.added;
      }
    }
    result.head_sequence.push_back(step.head);
    result.diagnostics.steps.push_back(std::move(step));
  }

  if (order.size() > n) order.resize(n);
  result.short_result = order.size() < n;
  result.items.reserve(order.size());
  for (auto e : order) {
    const auto& entry = entries[e];
    result.items.push_back({entry.item_id, entry.frequency, entry.weighted_score, entry.best_similarity});
  }
  result.diagnostics.labels.assign(labels.begin(), labels.end());
  result.diagnostics.points.reserve(points.size());
  for (const auto& p : points) {
    result.diagnostics.points.push_back({entries[p.entry].item_id, p.model_index, p.similarity});
  }
  return result;
}

}  // namespace enclip::ranker
