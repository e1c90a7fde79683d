#include "enclip/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace enclip::search {

std::vector<double> unit_query(std::span<const float> query) {
  double sum = 0.0;
  for (float x : query) {
    if (!std::isfinite(x)) throw SearchError("query has a non-finite component");
    sum += static_cast<double>(x) * x;
  }
  if (sum == 0.0) throw SearchError("query is the zero vector");
  const double norm = std::sqrt(sum);
  std::vector<double> unit(query.size());
  std::transform(query.begin(), query.end(), unit.begin(), [norm](float x) { return x / norm; });
  return unit;
}

HitList cosine_topk(const corpus::EmbeddingMatrix& matrix, std::span<const float> query, std::size_t k,
                    std::size_t model_index) {
  if (k == 0) throw SearchError("k must be positive");
  if (query.size() != matrix.dim()) {
    throw SearchError("query has " + std::to_string(query.size()) + " components, model " +
                      matrix.model_id() + " has dim " + std::to_string(matrix.dim()));
  }
  if (!matrix.normalized()) throw SearchError("model " + matrix.model_id() + " is not normalized");
  const auto q = unit_query(query);

  std::vector<double> sims(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto r = matrix.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) dot += q[d] * r[d];
    sims[i] = dot;
  }

  std::vector<std::size_t> order(matrix.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return hit_before(sims[a], matrix.id(a), sims[b], matrix.id(b));
                    });

  HitList hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto row = order[i];
    hits.push_back({matrix.id(row), row, model_index, sims[row], i + 1});
  }
  return hits;
}

std::vector<HitList> multi_model_retrieve(const corpus::ModelSet& set,
                                          const std::vector<std::vector<float>>& queries, std::size_t k) {
  if (queries.size() != set.z()) {
    throw SearchError("expected " + std::to_string(set.z()) + " query vectors, got " +
                      std::to_string(queries.size()));
  }
  std::vector<HitList> lists;
  lists.reserve(set.z());
  for (std::size_t n = 0; n < set.z(); ++n) lists.push_back(cosine_topk(set.model(n), queries[n], k, n));
  return lists;
}

}  // namespace enclip::search
