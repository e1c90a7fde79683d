/**
 * @file dimred.hpp
 * @brief Exact t-SNE to two dimensions and the trustworthiness score used to
 *        check neighborhood preservation.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace enclip::dimred {

class DimredError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct TsneParams {
  double perplexity = 30.0;
  double learning_rate = 200.0;
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::uint64_t seed = 0;
};

struct KlSample {
  int iteration = 0;
  double kl = 0.0;
};

struct Projection2D {
  std::vector<std::array<double, 2>> coords;
  double perplexity = 0.0;       ///< effective value after clamping
  std::vector<KlSample> kl_trace;  ///< sampled after the exaggeration phase
};

/// Perplexity actually used for n points: min(requested, max(2, floor((n-1)/3))).
double effective_perplexity(double requested, std::size_t n);

/// Exact O(n^2) t-SNE of `n` row-major points of dimension `dim`.
/// Deterministic for a fixed seed.
Projection2D tsne_2d(std::span<const float> points, std::size_t n, std::size_t dim, const TsneParams& params = {});

/// Symmetrized joint input affinities (n x n, row-major), as used by tsne_2d.
std::vector<double> joint_affinities(std::span<const float> points, std::size_t n, std::size_t dim,
                                     double perplexity);

/// Trustworthiness of a low-dimensional embedding at neighborhood size k, in
/// [0, 1]. `high` is n x dim, `low` is n x low_dim, both row-major.
double trustworthiness(std::span<const double> high, std::size_t dim, std::span<const double> low,
                       std::size_t low_dim, std::size_t n, std::size_t k);

}  // namespace enclip::dimred
