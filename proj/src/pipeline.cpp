#include "enclip/pipeline.hpp"

namespace enclip {

ranker::RankedResult rank_hits(const corpus::ModelSet& set, const std::vector<search::HitList>& hits,
                               const PipelineConfig& config) {
  const auto pool = ranker::build_candidate_pool(hits, set);
  const auto matrix = pool.point_matrix();
  const auto count = pool.all_points().size();

  auto tsne = config.tsne;
  tsne.seed = config.seed;
  const auto projection = dimred::tsne_2d(matrix, count, pool.dim(), tsne);

  const auto selection = cluster::select_k(projection.coords, config.k_min, config.k_max, config.seed);

  auto result = ranker::enclip_rank(pool, selection.assignment.labels, config.n, config.variant);
  result.diagnostics.coords = projection.coords;
  result.diagnostics.k = selection.k;
  result.diagnostics.silhouette = selection.assignment.silhouette;
  result.diagnostics.warnings = selection.warnings;
  return result;
}

ranker::RankedResult run_pipeline(const corpus::ModelSet& set, const std::vector<std::vector<float>>& queries,
                                  const PipelineConfig& config) {
  return rank_hits(set, search::multi_model_retrieve(set, queries, config.top_k_per_model), config);
}

}  // namespace enclip
