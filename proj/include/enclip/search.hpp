/**
 * @file search.hpp
 * @brief Exact cosine top-k retrieval over one checkpoint, and the fan-out
 *        across every checkpoint of a ModelSet.
 */

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "enclip/corpus.hpp"

namespace enclip::search {

class SearchError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One entry of a model's ranked output.
struct RetrievalHit {
  std::string item_id;
  std::size_t row = 0;          ///< row of the item in the model's matrix
  std::size_t model_index = 0;  ///< ensemble index n of the model
  double similarity = 0.0;
  std::size_t rank = 0;  ///< 1-based
};

using HitList = std::vector<RetrievalHit>;

inline constexpr std::size_t kDefaultTopK = 20;

/// Total order on hits: similarity descending, then item_id ascending.
inline bool hit_before(double sim_a, const std::string& id_a, double sim_b, const std::string& id_b) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return id_a < id_b;
}

/// Returns the unit vector of `query` in double precision. Throws
/// SearchError on a zero or non-finite query.
std::vector<double> unit_query(std::span<const float> query);

/// The min(k, corpus size) items most similar to the query, best first.
/// `model_index` is copied into each hit.
HitList cosine_topk(const corpus::EmbeddingMatrix& matrix, std::span<const float> query, std::size_t k,
                    std::size_t model_index = 0);

/// One cosine_topk per model. `queries[n]` is the query embedded by model n.
std::vector<HitList> multi_model_retrieve(const corpus::ModelSet& set,
                                          const std::vector<std::vector<float>>& queries, std::size_t k);

}  // namespace enclip::search
