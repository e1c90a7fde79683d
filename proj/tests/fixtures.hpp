// Random instance generators shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "enclip/cluster.hpp"
#include "enclip/search.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace enclip::testing {

/// Random per-model hit lists over a small corpus plus a random clustering of
/// the pooled points. Similarities come from a coarse grid so ties occur.
struct RankInstance {
  corpus::ModelSet set;
  std::vector<search::HitList> hits;
  std::map<std::pair<std::string, int>, int> label;  // (item, model) -> cluster
  std::size_t n = 1;
};

inline RankInstance random_rank_instance(std::mt19937_64& rng, std::size_t max_z = 5, std::size_t max_items = 12,
                                         std::size_t max_n = 12) {
  RankInstance inst;
  const auto z = std::uniform_int_distribution<std::size_t>(1, max_z)(rng);
  const auto items = std::uniform_int_distribution<std::size_t>(1, max_items)(rng);
  std::vector<corpus::EmbeddingMatrix> models;
  for (std::size_t m = 0; m < z; ++m) {
    models.push_back(random_matrix(rng, items, 4, "m" + std::to_string(m), static_cast<std::uint32_t>(10 * (m + 1)), "c"));
  }
  inst.set = model_set(std::move(models));

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < items; ++i) ids.push_back("c" + std::to_string(i));
  const int clusters = std::uniform_int_distribution<int>(1, 4)(rng);
  std::uniform_int_distribution<int> pick_cluster(0, clusters - 1);
  std::uniform_int_distribution<int> grid(0, 8);

  for (std::size_t m = 0; m < z; ++m) {
    auto chosen = ids;
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(std::uniform_int_distribution<std::size_t>(1, items)(rng));
    search::HitList list;
    for (const auto& id : chosen) {
      search::RetrievalHit h;
      h.item_id = id;
      h.row = *inst.set.model(m).find(id);
      h.model_index = m;
      h.similarity = 0.1 * (grid(rng) + 1);
      list.push_back(h);
      inst.label[{id, static_cast<int>(m)}] = pick_cluster(rng);
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return search::hit_before(a.similarity, a.item_id, b.similarity, b.item_id);
    });
    for (std::size_t r = 0; r < list.size(); ++r) list[r].rank = r + 1;
    inst.hits.push_back(std::move(list));
  }
  inst.n = std::uniform_int_distribution<std::size_t>(1, max_n)(rng);
  return inst;
}

inline std::vector<std::vector<oracle::ListedItem>> listed(const std::vector<search::HitList>& hits) {
  std::vector<std::vector<oracle::ListedItem>> out;
  for (const auto& list : hits) {
    out.emplace_back();
    for (const auto& h : list) out.back().push_back({h.item_id, h.similarity});
  }
  return out;
}

/// G well separated isotropic 2D Gaussians (unit sigma, centers at least
/// `min_gap` apart), `per` points each. Returns points and true labels.
inline std::pair<std::vector<cluster::Point2>, std::vector<int>> separated_blobs(std::mt19937_64& rng, int groups,
                                                                                  int per, double min_gap = 10.0) {
  std::uniform_real_distribution<double> box(0.0, 25.0 * groups);
  std::vector<cluster::Point2> centers;
  while (static_cast<int>(centers.size()) < groups) {
    cluster::Point2 c{box(rng), box(rng)};
    bool ok = true;
    for (const auto& o : centers) ok = ok && std::hypot(c[0] - o[0], c[1] - o[1]) >= min_gap;
    if (ok) centers.push_back(c);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cluster::Point2> pts;
  std::vector<int> truth;
  for (int g = 0; g < groups; ++g) {
    for (int i = 0; i < per; ++i) {
      pts.push_back({centers[static_cast<std::size_t>(g)][0] + normal(rng), centers[static_cast<std::size_t>(g)][1] + normal(rng)});
      truth.push_back(g);
    }
  }
  return {pts, truth};
}

/// 150 points in 512-d: three unit-variance Gaussians whose centers are 10
/// apart (vertices of an equilateral triangle along the first axes).
inline std::vector<float> three_gaussians_512(std::uint64_t seed, std::size_t per = 50) {
  constexpr std::size_t dim = 512;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double side = 10.0 / std::sqrt(2.0);
  std::vector<float> out;
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double center = d == g ? side : 0.0;
        out.push_back(static_cast<float>(center + normal(rng)));
      }
    }
  }
  return out;
}

}  // namespace enclip::testing
