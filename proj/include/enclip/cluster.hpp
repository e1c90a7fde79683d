/**
 * @file cluster.hpp
 * @brief K-means (k-means++ seeding, Lloyd iterations, restarts) over 2D
 *        points, the silhouette score, and silhouette-driven choice of K.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace enclip::cluster {

class ClusterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

using Point2 = std::array<double, 2>;

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  double tolerance = 1e-6;  ///< stop once no centroid moves further than this
};

struct ClusterAssignment {
  std::vector<int> labels;  ///< canonical: cluster ids numbered by first occurrence
  std::vector<Point2> centroids;
  double inertia = 0.0;
  int k = 0;
  double silhouette = 0.0;
  std::uint64_t seed = 0;
  /// Inertia after every Lloyd iteration of the winning restart.
  std::vector<double> inertia_trace;
};

/// Sum of squared distances from each point to its cluster centroid.
double inertia(std::span<const Point2> points, std::span<const int> labels, std::span<const Point2> centroids);

/// Throws ClusterError if any Lloyd iteration of any restart increased the
/// inertia, so callers can assert monotonicity across a whole run.
ClusterAssignment kmeans(std::span<const Point2> points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Mean silhouette. Points in singleton clusters contribute 0.
double silhouette(std::span<const Point2> points, std::span<const int> labels);

struct KSelection {
  int k = 0;
  ClusterAssignment assignment;
  std::vector<ClusterAssignment> candidates;  ///< one per K tried, ascending K
  std::vector<std::string> warnings;
};

inline constexpr int kDefaultKMin = 4;
inline constexpr int kDefaultKMax = 6;

/// Tries every K in [k_min, k_max] and keeps the best silhouette; ties go to
/// the larger relative inertia drop from K-1, then to the smaller K. With
/// fewer points than k_min, clusters into max(1, n) groups without selection.
KSelection select_k(std::span<const Point2> points, int k_min, int k_max, std::uint64_t seed,
                    const KMeansOptions& options = {});

}  // namespace enclip::cluster
