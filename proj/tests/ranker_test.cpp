#include "enclip/ranker.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace enclip;
using ranker::RankingVariant;

namespace {

// A..E in three models; model n retrieves `lists[n]` with descending similarities.
struct Worked {
  corpus::ModelSet set;
  std::vector<search::HitList> hits;
};

Worked worked(const std::vector<std::vector<std::string>>& lists, std::size_t corpus = 5) {
  std::mt19937_64 rng(11);
  std::vector<corpus::EmbeddingMatrix> models;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < corpus; ++i) ids.push_back(std::string(1, static_cast<char>('A' + i)));
  for (std::size_t n = 0; n < lists.size(); ++n) {
    std::vector<float> values;
    for (std::size_t i = 0; i < corpus; ++i) {
      const auto v = enclip::testing::random_unit(rng, 4);
      values.insert(values.end(), v.begin(), v.end());
    }
    models.emplace_back("m" + std::to_string(n), static_cast<std::uint32_t>(n + 1), 4, ids, values, true);
  }
  Worked w{enclip::testing::model_set(models), {}};
  for (std::size_t n = 0; n < lists.size(); ++n) {
    search::HitList list;
    for (std::size_t r = 0; r < lists[n].size(); ++r) {
      const auto& id = lists[n][r];
      list.push_back({id, *w.set.model(n).find(id), n, 0.9 - 0.1 * static_cast<double>(r), r + 1});
    }
    w.hits.push_back(list);
  }
  return w;
}

std::vector<int> labels_by_item(const ranker::CandidatePool& pool, const std::map<std::string, int>& cluster_of) {
  std::vector<int> labels;
  for (const auto& p : pool.all_points()) labels.push_back(cluster_of.at(pool.entries()[p.entry].item_id));
  return labels;
}

std::vector<std::string> ids(const ranker::RankedResult& r) {
  std::vector<std::string> out;
  for (const auto& it : r.items) out.push_back(it.item_id);
  return out;
}

const std::vector<std::vector<std::string>> kZ3 = {{"A", "B", "C"}, {"B", "C", "D"}, {"C", "D", "E"}};

}  // namespace

TEST(WeightedScore, WorkedValues) {
  EXPECT_EQ(ranker::weighted_score({false, false, false, false, false}), 0.0);
  EXPECT_DOUBLE_EQ(ranker::weighted_score({false, false, false, false, true}), 1.6);
  EXPECT_DOUBLE_EQ(ranker::weighted_score({true, true, true, true, true}), 3.1);
  const double w0 = ranker::weighted_score({true, false});
  const double w1 = ranker::weighted_score({false, true});
  EXPECT_DOUBLE_EQ(w0, 0.1);
  EXPECT_EQ(w1, 2.0 * w0);
}

TEST(WeightedScore, MatchesDirectSumBitwise) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 2000; ++t) {
    std::vector<bool> occ(std::uniform_int_distribution<std::size_t>(1, 8)(rng));
    for (std::size_t n = 0; n < occ.size(); ++n) occ[n] = rng() & 1u;
    EXPECT_EQ(ranker::weighted_score(occ), oracle::weighted_score(occ));
  }
}

TEST(WeightedScore, AddingAnOccurrenceNeverDecreases) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<bool> occ(5);
    for (std::size_t n = 0; n < 5; ++n) occ[n] = rng() & 1u;
    for (std::size_t n = 0; n < 5; ++n) {
      if (occ[n]) continue;
      auto more = occ;
      more[n] = true;
      EXPECT_GT(ranker::weighted_score(more), ranker::weighted_score(occ));
    }
  }
}

TEST(Pool, WorkedFrequenciesAndScores) {
  const auto w = worked(kZ3);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  ASSERT_EQ(pool.size(), 5u);
  const std::map<std::string, std::pair<int, double>> expected = {
      {"A", {1, 0.1}}, {"B", {2, 0.3}}, {"C", {3, 0.7}}, {"D", {2, 0.6}}, {"E", {1, 0.4}}};
  for (const auto& [id, fw] : expected) {
    const auto& e = pool.entry(id);
    EXPECT_EQ(e.frequency, fw.first) << id;
    EXPECT_NEAR(e.weighted_score, fw.second, 1e-12) << id;
    EXPECT_EQ(e.points.size(), static_cast<std::size_t>(e.frequency));
  }
  EXPECT_EQ(pool.all_points().size(), 9u);
  EXPECT_DOUBLE_EQ(pool.entry("C").best_similarity, 0.9);
  EXPECT_EQ(pool.point_matrix().size(), 9u * 4u);
  for (const auto& p : pool.all_points()) EXPECT_EQ(p.embedding.size(), 4u);
}

TEST(Pool, SingleModelBaseCase) {
  const auto w = worked({{"A"}}, 1);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  EXPECT_EQ(pool.entry("A").frequency, 1);
  EXPECT_DOUBLE_EQ(pool.entry("A").weighted_score, 0.1);
}

TEST(Pool, Errors) {
  auto w = worked({{}, {}, {}});
  EXPECT_THROW(ranker::build_candidate_pool(w.hits, w.set), ranker::RankerError);
  w.hits.pop_back();
  EXPECT_THROW(ranker::build_candidate_pool(w.hits, w.set), ranker::RankerError);
  auto twice = worked({{"A", "A"}, {}, {}});
  EXPECT_THROW(ranker::build_candidate_pool(twice.hits, twice.set), ranker::RankerError);
}

TEST(Heads, WorkedOrder) {
  const auto w = worked(kZ3);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  EXPECT_EQ(ranker::select_heads(pool), (std::vector<std::string>{"C", "D", "B", "E", "A"}));
}

TEST(Heads, FullTieFallsBackToItemId) {
  auto w = worked({{"D", "B", "A", "C"}}, 4);
  for (auto& h : w.hits[0]) h.similarity = 0.5;
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  EXPECT_EQ(ranker::select_heads(pool), (std::vector<std::string>{"A", "B", "C", "D"}));
}

TEST(Rank, WorkedExample) {
  const auto w = worked(kZ3);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  const auto labels = labels_by_item(pool, {{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}, {"E", 0}});
  const auto r4 = ranker::enclip_rank(pool, labels, 4);
  EXPECT_EQ(ids(r4), (std::vector<std::string>{"C", "D", "E", "B"}));
  EXPECT_EQ(r4.head_sequence, (std::vector<std::string>{"C", "D", "B"}));
  EXPECT_FALSE(r4.short_result);
  ASSERT_EQ(r4.diagnostics.steps.size(), 3u);
  EXPECT_EQ(r4.diagnostics.steps[0].added, 3u);
  EXPECT_EQ(r4.diagnostics.steps[1].added, 0u);
  EXPECT_EQ(r4.diagnostics.steps[2].clusters, std::vector<int>{1});
  EXPECT_EQ(r4.diagnostics.points.size(), 9u);

  EXPECT_EQ(ids(ranker::enclip_rank(pool, labels, 1)), std::vector<std::string>{"C"});

  const auto r10 = ranker::enclip_rank(pool, labels, 10);
  EXPECT_EQ(ids(r10), (std::vector<std::string>{"C", "D", "E", "B", "A"}));
  EXPECT_TRUE(r10.short_result);
}

TEST(Rank, SingleModelSingleClusterIsSimilarityOrder) {
  const auto w = worked({{"C", "A", "E", "B", "D"}});
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  const std::vector<int> labels(pool.all_points().size(), 0);
  EXPECT_EQ(ids(ranker::enclip_rank(pool, labels, 5)), (std::vector<std::string>{"C", "A", "E", "B", "D"}));
}

TEST(Rank, Errors) {
  const auto w = worked(kZ3);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  const std::vector<int> labels(pool.all_points().size(), 0);
  EXPECT_THROW(ranker::enclip_rank(pool, labels, 0), ranker::RankerError);
  EXPECT_THROW(ranker::enclip_rank(pool, std::vector<int>(3, 0), 2), ranker::RankerError);
}

TEST(Rank, VariantsDifferOnlyInBatchOrder) {
  // One cluster: the batch is the whole pool, so output equals the comparator sort.
  const auto w = worked({{"A", "B"}, {"B", "C"}, {"A", "D"}, {"D", "E"}}, 5);
  const auto pool = ranker::build_candidate_pool(w.hits, w.set);
  const std::vector<int> labels(pool.all_points().size(), 0);
  // A 0.1+0.4=0.5 f2, B 0.3 f2, C 0.2 f1, D 0.4+0.8=1.2 f2, E 0.8 f1
  EXPECT_EQ(ids(ranker::enclip_rank(pool, labels, 5, RankingVariant::FreqThenWs)),
            (std::vector<std::string>{"D", "A", "B", "E", "C"}));
  EXPECT_EQ(ids(ranker::enclip_rank(pool, labels, 5, RankingVariant::WsOnly)),
            (std::vector<std::string>{"D", "E", "A", "B", "C"}));
  // freq*ws: D 2.4, A 1.0, E 0.8, B 0.6, C 0.2
  EXPECT_EQ(ids(ranker::enclip_rank(pool, labels, 5, RankingVariant::FreqTimesWs)),
            (std::vector<std::string>{"D", "A", "E", "B", "C"}));
}

TEST(Rank, VariantNames) {
  for (auto v : {RankingVariant::FreqThenWs, RankingVariant::WsOnly, RankingVariant::FreqTimesWs}) {
    EXPECT_EQ(ranker::parse_variant(ranker::to_string(v)), v);
  }
  EXPECT_THROW(ranker::parse_variant("bogus"), ranker::RankerError);
}

TEST(Rank, MatchesStraightLineReference) {
  std::mt19937_64 rng(3);
  const std::map<RankingVariant, oracle::Key> keys = {{RankingVariant::FreqThenWs, oracle::Key::FreqThenWs},
                                                      {RankingVariant::WsOnly, oracle::Key::WsOnly},
                                                      {RankingVariant::FreqTimesWs, oracle::Key::FreqTimesWs}};
  for (int t = 0; t < 300; ++t) {
    const auto inst = enclip::testing::random_rank_instance(rng);
    const auto pool = ranker::build_candidate_pool(inst.hits, inst.set);
    std::vector<int> labels;
    for (const auto& p : pool.all_points()) {
      labels.push_back(inst.label.at({pool.entries()[p.entry].item_id, static_cast<int>(p.model_index)}));
    }
    for (const auto& [variant, key] : keys) {
      const auto got = ranker::enclip_rank(pool, labels, inst.n, variant);
      EXPECT_EQ(ids(got), oracle::enclip_rank(enclip::testing::listed(inst.hits), inst.label, inst.n, key)) << "instance " << t;
    }
  }
}

TEST(Rank, StructuralInvariants) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 300; ++t) {
    const auto inst = enclip::testing::random_rank_instance(rng);
    const auto pool = ranker::build_candidate_pool(inst.hits, inst.set);
    std::vector<int> labels;
    for (const auto& p : pool.all_points()) {
      labels.push_back(inst.label.at({pool.entries()[p.entry].item_id, static_cast<int>(p.model_index)}));
    }
    const auto r = ranker::enclip_rank(pool, labels, inst.n);
    const auto got = ids(r);
    EXPECT_EQ(got.size(), std::min(inst.n, pool.size()));
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size());
    EXPECT_EQ(got.front(), ranker::select_heads(pool).front());
    std::size_t total = 0;
    for (const auto& e : pool.entries()) total += static_cast<std::size_t>(e.frequency);
    EXPECT_EQ(pool.all_points().size(), total);
  }
}
