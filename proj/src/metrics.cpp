#include "enclip/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace enclip::evalkit {

std::string_view to_string(ApDenominator d) {
  return d == ApDenominator::MinRelevantK ? "min" : "total";
}

ApDenominator parse_denominator(std::string_view name) {
  if (name == "min") return ApDenominator::MinRelevantK;
  if (name == "total") return ApDenominator::TotalRelevant;
  throw MetricError("unknown AP denominator '" + std::string(name) + "' (expected min or total)");
}

double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  if (k < 1) throw MetricError("k must be at least 1");
  const auto depth = std::min(k, ranked.size());
  const auto hits = std::count_if(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(depth),
                                  [&](const std::string& id) { return relevant.count(id) > 0; });
  return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k,
                              ApDenominator denominator) {
  if (k < 1) throw MetricError("k must be at least 1");
  if (relevant.empty()) throw MetricError("average precision is undefined without relevant items");
  const auto depth = std::min(k, ranked.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < depth; ++j) {
    if (relevant.count(ranked[j])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
  }
  const auto denom = denominator == ApDenominator::MinRelevantK ? std::min(relevant.size(), k) : relevant.size();
  return sum / static_cast<double>(denom);
}

double mean_average_precision(std::span<const double> per_query_ap) {
  if (per_query_ap.empty()) throw MetricError("mean average precision needs at least one query");
  return std::accumulate(per_query_ap.begin(), per_query_ap.end(), 0.0) / static_cast<double>(per_query_ap.size());
}

}  // namespace enclip::evalkit
