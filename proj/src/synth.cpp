#include "enclip/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace enclip::evalkit {

namespace {

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

std::uint32_t epoch_for(std::size_t n) {
  static constexpr std::uint32_t kEpochs[] = {10, 30, 50, 80, 100};
  if (n < std::size(kEpochs)) return kEpochs[n];
  return static_cast<std::uint32_t>(100 + 20 * (n - std::size(kEpochs) + 1));
}

}  // namespace

SynthFixture synth_fixture(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.items == 0 || spec.groups == 0 || spec.models == 0 || spec.dim == 0) {
    throw EvalError("synthetic fixture needs positive item, group, model and dim counts");
  }
  if (spec.groups > spec.items) throw EvalError("more groups than items");
  if (spec.groups < 2 && spec.blind_fraction > 0.0) throw EvalError("blind spots need at least two groups");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * normal(rng);
    return v;
  };

  const std::size_t dim = spec.dim;
  std::vector<std::vector<double>> centers;
  for (std::size_t g = 0; g < spec.groups; ++g) centers.push_back(gaussian(dim, 1.0));

  std::vector<std::string> ids;
  std::vector<std::size_t> group_of;
  std::vector<std::vector<std::size_t>> members(spec.groups);
  for (std::size_t i = 0; i < spec.items; ++i) {
    ids.push_back(padded("item-", i, 5));
    group_of.push_back(i % spec.groups);
    members[i % spec.groups].push_back(i);
  }

  // Shared position of every item: its group center plus a per-item offset.
  std::vector<std::vector<double>> base(spec.items);
  for (std::size_t i = 0; i < spec.items; ++i) {
    base[i] = gaussian(dim, spec.item_noise);
    for (std::size_t d = 0; d < dim; ++d) base[i][d] += centers[group_of[i]][d];
  }

  // blind[n][i] = group that model n wrongly places item i next to.
  std::vector<std::vector<std::ptrdiff_t>> blind(spec.models, std::vector<std::ptrdiff_t>(spec.items, -1));
  for (std::size_t g = 0; g < spec.groups; ++g) {
    auto m = members[g];
    std::shuffle(m.begin(), m.end(), rng);
    auto slice = static_cast<std::size_t>(spec.blind_fraction * static_cast<double>(m.size()));
    slice = std::min(slice, m.size() / spec.models);
    std::uniform_int_distribution<std::size_t> other(0, spec.groups - 2);
    for (std::size_t n = 0; n < spec.models; ++n) {
      for (std::size_t s = 0; s < slice; ++s) {
        auto target = other(rng);
        if (target >= g) ++target;
        blind[n][m[n * slice + s]] = static_cast<std::ptrdiff_t>(target);
      }
    }
  }

  SynthFixture fx;
  for (std::size_t n = 0; n < spec.models; ++n) {
    std::vector<float> values;
    values.reserve(spec.items * dim);
    for (std::size_t i = 0; i < spec.items; ++i) {
      std::vector<double> v;
      if (blind[n][i] >= 0) {
        v = gaussian(dim, spec.decoy_noise);
        const auto& c = centers[static_cast<std::size_t>(blind[n][i])];
        for (std::size_t d = 0; d < dim; ++d) v[d] += c[d];
      } else {
        v = base[i];
      }
      const auto noise = gaussian(dim, spec.model_noise);
      const std::size_t offset = values.size();
      for (std::size_t d = 0; d < dim; ++d) values.push_back(static_cast<float>(v[d] + noise[d]));
      corpus::normalize(std::span<float>(values).subspan(offset, dim));
    }
    fx.stores.emplace_back(padded("epoch-", epoch_for(n), 3), epoch_for(n), static_cast<std::uint32_t>(dim), ids,
                           std::move(values), true);
  }

  for (std::size_t g = 0; g < spec.groups; ++g) {
    const auto category = padded("group-", g, 2);
    for (std::size_t r = 0; r < spec.queries_per_group; ++r) {
      QueryRecord q;
      q.query_id = padded(("q-" + category + "-").c_str(), r, 2);
      q.category = category;
      auto centre = gaussian(dim, spec.query_noise);
      for (std::size_t d = 0; d < dim; ++d) centre[d] += centers[g][d];
      for (std::size_t n = 0; n < spec.models; ++n) {
        const auto noise = gaussian(dim, spec.model_query_noise);
        std::vector<float> vec(dim);
        for (std::size_t d = 0; d < dim; ++d) vec[d] = static_cast<float>(centre[d] + noise[d]);
        q.vectors[fx.stores[n].model_id()] = std::move(vec);
      }
      RelevanceJudgment rel{q.query_id, {}};
      for (auto i : members[g]) rel.relevant.push_back(ids[i]);
      fx.queries.push_back(std::move(q));
      fx.qrels.push_back(std::move(rel));
    }
  }
  return fx;
}

void write_fixture(const SynthFixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& m : fixture.stores) {
    corpus::write_store(m, dir / ("model-" + m.model_id() + corpus::kStoreExtension));
  }
  write_queries(fixture.queries, dir / "queries.jsonl");
  write_qrels(fixture.qrels, dir / "qrels.jsonl");
}

}  // namespace enclip::evalkit
