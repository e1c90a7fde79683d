#include "enclip/search.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace enclip;
using enclip::testing::random_matrix;
using enclip::testing::random_unit;

namespace {

std::vector<double> oracle_sims(const corpus::EmbeddingMatrix& m, const std::vector<float>& query) {
  double norm2 = 0.0;
  for (float x : query) norm2 += static_cast<double>(x) * x;
  const double norm = std::sqrt(norm2);
  std::vector<double> sims;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double dot = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d) dot += (query[d] / norm) * m.row(i)[d];
    sims.push_back(dot);
  }
  return sims;
}

// Matrix with some rows duplicated under new ids so exact ties occur.
corpus::EmbeddingMatrix with_duplicates(std::mt19937_64& rng, std::size_t count, std::uint32_t dim) {
  const auto base = random_matrix(rng, count, dim);
  std::vector<std::string> ids = base.ids();
  std::vector<float> values(base.values().begin(), base.values().end());
  for (std::size_t i = 0; i < count / 4; ++i) {
    const auto src = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
    ids.push_back("dup-" + std::to_string(i));
    values.insert(values.end(), base.row(src).begin(), base.row(src).end());
  }
  return corpus::EmbeddingMatrix("m", 1, dim, std::move(ids), std::move(values), true);
}

}  // namespace

TEST(CosineTopk, IdentityQueryRanksItselfFirst) {
  std::mt19937_64 rng(1);
  const auto m = random_matrix(rng, 100, 32);
  for (std::size_t i = 0; i < m.size(); i += 17) {
    const std::vector<float> q(m.row(i).begin(), m.row(i).end());
    const auto hits = search::cosine_topk(m, q, 5, 3);
    ASSERT_EQ(hits.size(), 5u);
    EXPECT_EQ(hits[0].item_id, m.id(i));
    EXPECT_EQ(hits[0].row, i);
    EXPECT_EQ(hits[0].model_index, 3u);
    EXPECT_EQ(hits[0].rank, 1u);
    EXPECT_NEAR(hits[0].similarity, 1.0, 1e-6);
  }
}

TEST(CosineTopk, ClampsToCorpusSize) {
  std::mt19937_64 rng(2);
  const auto m = random_matrix(rng, 7, 8);
  const auto hits = search::cosine_topk(m, random_unit(rng, 8), 50);
  EXPECT_EQ(hits.size(), 7u);
  for (std::size_t r = 0; r < hits.size(); ++r) EXPECT_EQ(hits[r].rank, r + 1);
}

TEST(CosineTopk, MatchesExhaustiveSortWithTies) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto count = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    const auto dim = std::uniform_int_distribution<std::uint32_t>(2, 48)(rng);
    const auto m = with_duplicates(rng, count, dim);
    auto q = random_unit(rng, dim);
    for (auto& x : q) x *= 3.5f;
    const auto k = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto expected = oracle::exhaustive_topk(m.ids(), oracle_sims(m, q), k);
    const auto hits = search::cosine_topk(m, q, k);
    ASSERT_EQ(hits.size(), expected.size());
    for (std::size_t r = 0; r < hits.size(); ++r) {
      EXPECT_EQ(hits[r].item_id, expected[r].first);
      EXPECT_EQ(hits[r].similarity, expected[r].second);
    }
  }
}

TEST(CosineTopk, InvariantToCorpusOrder) {
  std::mt19937_64 rng(4);
  const auto m = with_duplicates(rng, 120, 16);
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> ids;
  std::vector<float> values;
  for (auto i : perm) {
    ids.push_back(m.id(i));
    values.insert(values.end(), m.row(i).begin(), m.row(i).end());
  }
  const corpus::EmbeddingMatrix shuffled("m", 1, 16, ids, values, true);
  const auto q = random_unit(rng, 16);
  const auto a = search::cosine_topk(m, q, 30);
  const auto b = search::cosine_topk(shuffled, q, 30);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].item_id, b[r].item_id);
    EXPECT_EQ(a[r].similarity, b[r].similarity);
  }
}

TEST(CosineTopk, RejectsBadInput) {
  std::mt19937_64 rng(5);
  const auto m = random_matrix(rng, 4, 3);
  EXPECT_THROW(search::cosine_topk(m, random_unit(rng, 3), 0), search::SearchError);
  EXPECT_THROW(search::cosine_topk(m, random_unit(rng, 4), 1), search::SearchError);
  EXPECT_THROW(search::cosine_topk(m, std::vector<float>{0, 0, 0}, 1), search::SearchError);
  EXPECT_THROW(search::cosine_topk(m, std::vector<float>{NAN, 0, 1}, 1), search::SearchError);
  const corpus::EmbeddingMatrix raw("r", 1, 2, {"a"}, {3.0f, 4.0f}, false);
  EXPECT_THROW(search::cosine_topk(raw, std::vector<float>{1, 0}, 1), search::SearchError);
}

TEST(MultiModel, OneListPerModelMatchingEachOracle) {
  std::mt19937_64 rng(6);
  std::vector<corpus::EmbeddingMatrix> models;
  for (std::uint32_t n = 0; n < 3; ++n) models.push_back(random_matrix(rng, 60, 12, "m" + std::to_string(n), n + 1));
  const auto set = enclip::testing::model_set(models);
  std::vector<std::vector<float>> queries;
  for (int n = 0; n < 3; ++n) queries.push_back(random_unit(rng, 12));
  const auto lists = search::multi_model_retrieve(set, queries, 10);
  ASSERT_EQ(lists.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    const auto expected = oracle::exhaustive_topk(set.model(n).ids(), oracle_sims(set.model(n), queries[n]), 10);
    for (std::size_t r = 0; r < 10; ++r) {
      EXPECT_EQ(lists[n][r].item_id, expected[r].first);
      EXPECT_EQ(lists[n][r].model_index, n);
    }
  }
  queries.pop_back();
  EXPECT_THROW(search::multi_model_retrieve(set, queries, 10), search::SearchError);
}

TEST(HitOrder, TieBreaksOnItemId) {
  EXPECT_TRUE(search::hit_before(0.9, "b", 0.8, "a"));
  EXPECT_TRUE(search::hit_before(0.5, "a", 0.5, "b"));
  EXPECT_FALSE(search::hit_before(0.5, "b", 0.5, "a"));
}
