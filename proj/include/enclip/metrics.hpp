/**
 * @file metrics.hpp
 * @brief Precision@k, average precision@k and mean average precision.
 */

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>

namespace enclip::evalkit {

class MetricError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

using RelevantSet = std::unordered_set<std::string>;

/// Denominator of average precision.
enum class ApDenominator {
  MinRelevantK,   ///< min(|relevant|, k): a perfect top-k scores 1
  TotalRelevant,  ///< |relevant|
};

std::string_view to_string(ApDenominator d);
ApDenominator parse_denominator(std::string_view name);

/// Relevant items among the first k, divided by k. Slots past the end of
/// `ranked` count as misses.
double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// Sum over j <= k of precision@j * rel(j), divided per `denominator`.
double average_precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k,
                              ApDenominator denominator = ApDenominator::MinRelevantK);

double mean_average_precision(std::span<const double> per_query_ap);

}  // namespace enclip::evalkit
