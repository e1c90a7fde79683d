/**
 * @file pipeline.hpp
 * @brief End-to-end query path: per-model retrieval, candidate pooling,
 *        t-SNE projection, K selection and head-cluster ranking.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "enclip/cluster.hpp"
#include "enclip/corpus.hpp"
#include "enclip/dimred.hpp"
#include "enclip/ranker.hpp"
#include "enclip/search.hpp"

namespace enclip {

struct PipelineConfig {
  std::size_t top_k_per_model = search::kDefaultTopK;
  std::size_t n = 10;
  int k_min = cluster::kDefaultKMin;
  int k_max = cluster::kDefaultKMax;
  std::uint64_t seed = 0;
  ranker::RankingVariant variant = ranker::RankingVariant::FreqThenWs;
  dimred::TsneParams tsne{};  ///< seed is overridden by `seed`
};

/// Runs the full ranking for one query. `queries[n]` is the query embedded by
/// model n. Diagnostics (coordinates, labels, K, head steps) are always filled.
ranker::RankedResult run_pipeline(const corpus::ModelSet& set, const std::vector<std::vector<float>>& queries,
                                  const PipelineConfig& config);

/// Same, starting from already retrieved per-model hit lists.
ranker::RankedResult rank_hits(const corpus::ModelSet& set, const std::vector<search::HitList>& hits,
                               const PipelineConfig& config);

}  // namespace enclip
