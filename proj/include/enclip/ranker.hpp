/**
 * @file ranker.hpp
 * @brief Ensemble candidate pooling, epoch-weighted scoring and the
 *        head-cluster selection loop that produces the final ranking.
 *
 * Every model contributes its top-k hits. An item's frequency is the number of
 * models that returned it and its weighted score is the sum of 0.1 * 2^n over
 * those models, so later checkpoints weigh more. Each (model, item) occurrence
 * becomes one point in the shared latent space; after the points are clustered
 * the ranker walks items in frequency order ("heads"), pulls in every item that
 * shares a cluster with the current head and appends them sorted by
 * (frequency, weighted score) until N items are selected.
 */

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enclip/corpus.hpp"
#include "enclip/search.hpp"

namespace enclip::ranker {

class RankerError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Sort key applied to the items gathered from head clusters.
enum class RankingVariant {
  FreqThenWs,   ///< frequency, then weighted score (default)
  WsOnly,       ///< weighted score
  FreqTimesWs,  ///< frequency * weighted score
};

std::string_view to_string(RankingVariant variant);
RankingVariant parse_variant(std::string_view name);

/// Sum over n of 0.1 * 2^n for every set occurrence[n], in ascending n.
double weighted_score(const std::vector<bool>& occurrence);

/// One (model, item) occurrence in the latent space.
struct PoolPoint {
  std::size_t entry = 0;        ///< index into CandidatePool::entries()
  std::size_t model_index = 0;
  std::size_t row = 0;          ///< row in that model's matrix
  double similarity = 0.0;
  std::span<const float> embedding;
};

struct CandidateEntry {
  std::string item_id;
  std::vector<bool> occurrence;  ///< size z
  int frequency = 0;
  double weighted_score = 0.0;
  double best_similarity = 0.0;
  std::vector<std::size_t> points;  ///< indices into CandidatePool::all_points()
};

class CandidatePool {
public:
  const std::vector<CandidateEntry>& entries() const noexcept { return entries_; }
  const std::vector<PoolPoint>& all_points() const noexcept { return points_; }
  std::size_t z() const noexcept { return z_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::optional<std::size_t> find(const std::string& item_id) const;
  const CandidateEntry& entry(const std::string& item_id) const;

  /// Row-major (point count x dim) copy of the point embeddings.
  std::vector<float> point_matrix() const;

private:
  friend CandidatePool build_candidate_pool(const std::vector<search::HitList>&, const corpus::ModelSet&);

  std::size_t z_ = 0;
  std::size_t dim_ = 0;
  std::vector<CandidateEntry> entries_;
  std::vector<PoolPoint> points_;
  std::unordered_map<std::string, std::size_t> index_;
  corpus::ModelSet models_;  // keeps the embedding rows alive
};

/// Entries appear in first-retrieval order (model 0 by rank, then model 1, ...);
/// each entry's points are contiguous and ordered by model index.
CandidatePool build_candidate_pool(const std::vector<search::HitList>& hit_lists, const corpus::ModelSet& set);

/// Strict weak order used inside a head-cluster batch. Ties on the variant key
/// fall back to best_similarity descending, then item_id ascending.
bool rank_before(const CandidateEntry& a, const CandidateEntry& b, RankingVariant variant);

/// Every pool item ordered by (frequency desc, weighted_score desc,
/// best_similarity desc, item_id asc).
std::vector<std::string> select_heads(const CandidatePool& pool);

struct RankedItem {
  std::string item_id;
  int frequency = 0;
  double weighted_score = 0.0;
  double best_similarity = 0.0;
};

/// One iteration of the selection loop.
struct HeadStep {
  std::string head;
  std::vector<int> clusters;  ///< ascending cluster ids holding a point of the head
  std::size_t added = 0;      ///< new items appended by this head
};

/// Identity of one pool point, index-aligned with CandidatePool::all_points().
struct PointInfo {
  std::string item_id;
  std::size_t model_index = 0;
  double similarity = 0.0;
};

struct RankDiagnostics {
  std::vector<PointInfo> points;
  std::vector<std::array<double, 2>> coords;  ///< per pool point
  std::vector<int> labels;                    ///< per pool point
  int k = 0;
  double silhouette = 0.0;
  std::vector<HeadStep> steps;
  std::vector<std::string> warnings;
};

struct RankedResult {
  std::vector<RankedItem> items;
  std::vector<std::string> head_sequence;
  bool short_result = false;  ///< fewer than N items were reachable
  RankDiagnostics diagnostics;
};

/// Runs the head-cluster selection loop. `labels[p]` is the cluster of
/// pool.all_points()[p].
RankedResult enclip_rank(const CandidatePool& pool, std::span<const int> labels, std::size_t n,
                         RankingVariant variant = RankingVariant::FreqThenWs);

}  // namespace enclip::ranker
