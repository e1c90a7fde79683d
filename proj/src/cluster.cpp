#include "enclip/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace enclip::cluster {

namespace {

// Inertia may only fall; allow for summation rounding.
constexpr double kMonotoneSlack = 1e-9;
constexpr double kSilhouetteTieTolerance = 1e-12;

double dist2(const Point2& a, const Point2& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

std::vector<Point2> kmeanspp(std::span<const Point2> points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Point2> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centroids.push_back(points[pick(rng)]);

  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = dist2(points[i], centroids[0]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double d : closest) total += d;
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += closest[i];
        if (closest[i] > 0.0 && acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], dist2(points[i], centroids.back()));
  }
  return centroids;
}

void assign(std::span<const Point2> points, std::span<const Point2> centroids, std::vector<int>& labels) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = dist2(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = dist2(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
  }
}

// Gives every empty cluster the point farthest from its own centroid, taken
// from a cluster that can spare it, and moves that centroid onto the point.
void repair_empty(std::span<const Point2> points, std::vector<Point2>& centroids, std::vector<int>& labels) {
  const auto k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (sizes[l] < 2) continue;
      const double d = dist2(points[i], centroids[l]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.size()) break;  // cannot happen while k <= n
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(c);
    sizes[c] = 1;
    centroids[c] = points[far];
  }
}

std::vector<Point2> means(std::span<const Point2> points, std::span<const int> labels, std::size_t k) {
  std::vector<Point2> sums(k, Point2{0.0, 0.0});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    sums[l][0] += points[i][0];
    sums[l][1] += points[i][1];
    ++counts[l];
  }
  for (std::size_t c = 0; c < k; ++c) {
    sums[c][0] /= static_cast<double>(counts[c]);
    sums[c][1] /= static_cast<double>(counts[c]);
  }
  return sums;
}

ClusterAssignment lloyd(std::span<const Point2> points, int k, std::uint64_t seed, const KMeansOptions& options) {
  std::mt19937_64 rng(seed);
  auto centroids = kmeanspp(points, k, rng);
  std::vector<int> labels(points.size(), 0);
  ClusterAssignment out;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    assign(points, centroids, labels);
    repair_empty(points, centroids, labels);
    auto next = means(points, labels, static_cast<std::size_t>(k));
    double shift = 0.0;
    for (std::size_t c = 0; c < next.size(); ++c) shift = std::max(shift, std::sqrt(dist2(next[c], centroids[c])));
    centroids = std::move(next);

    const double current = inertia(points, labels, centroids);
    if (current > previous + kMonotoneSlack * std::max(1.0, previous)) {
      throw ClusterError("Lloyd inertia increased from " + std::to_string(previous) + " to " +
                         std::to_string(current) + " at iteration " + std::to_string(it));
    }
    out.inertia_trace.push_back(current);
    previous = current;
    if (shift < options.tolerance) break;
  }
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.inertia = previous;
  out.k = k;
  return out;
}

// Renumbers clusters by the order in which they first appear in `labels`.
void canonicalize(ClusterAssignment& a) {
  std::vector<int> remap(static_cast<std::size_t>(a.k), -1);
  int next = 0;
  for (int l : a.labels) {
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
  }
  std::vector<Point2> centroids(a.centroids.size());
  for (std::size_t c = 0; c < remap.size(); ++c) centroids[static_cast<std::size_t>(remap[c])] = a.centroids[c];
  for (int& l : a.labels) l = remap[static_cast<std::size_t>(l)];
  a.centroids = std::move(centroids);
}

}  // namespace

double inertia(std::span<const Point2> points, std::span<const int> labels, std::span<const Point2> centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += dist2(points[i], centroids[static_cast<std::size_t>(labels[i])]);
  return total;
}

ClusterAssignment kmeans(std::span<const Point2> points, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1) throw ClusterError("K must be at least 1");
  if (static_cast<std::size_t>(k) > points.size()) {
    throw ClusterError("K=" + std::to_string(k) + " exceeds the " + std::to_string(points.size()) + " points");
  }
  for (const auto& p : points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw ClusterError("non-finite point");
  }
  ClusterAssignment best;
  bool have = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    auto run = lloyd(points, k, restart_seed(seed, r), options);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  best.seed = seed;
  canonicalize(best);
  if (k >= 2 && points.size() >= 3) best.silhouette = silhouette(points, best.labels);
  return best;
}

double silhouette(std::span<const Point2> points, std::span<const int> labels) {
  const std::size_t n = points.size();
  if (labels.size() != n) throw ClusterError("label count does not match point count");
  if (n < 3) throw ClusterError("silhouette needs at least 3 points");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw ClusterError("silhouette needs at least 2 clusters");

  double total = 0.0;
  std::map<int, double> sum_to;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    sum_to.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum_to[labels[j]] += std::sqrt(dist2(points[i], points[j]));
    }
    const double a = sum_to[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, size] : sizes) {
      if (label != labels[i]) b = std::min(b, sum_to[label] / static_cast<double>(size));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

KSelection select_k(std::span<const Point2> points, int k_min, int k_max, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k_min < 1 || k_min > k_max) throw ClusterError("need 1 <= k_min <= k_max");
  const int n = static_cast<int>(points.size());
  if (n == 0) throw ClusterError("no points to cluster");
  KSelection sel;
  if (n < k_min) {
    sel.k = std::max(1, n);
    sel.warnings.push_back("only " + std::to_string(n) + " points; K clamped to " + std::to_string(sel.k) +
                           " below the requested range [" + std::to_string(k_min) + ", " +
                           std::to_string(k_max) + "]");
    sel.assignment = kmeans(points, sel.k, seed, options);
    sel.candidates.push_back(sel.assignment);
    return sel;
  }
  if (k_max > n) {
    sel.warnings.push_back("K range upper bound " + std::to_string(k_max) + " clamped to " + std::to_string(n) +
                           " points");
    k_max = n;
  }

  if (k_min == k_max) {
    sel.k = k_min;
    sel.assignment = kmeans(points, k_min, seed, options);
    sel.candidates.push_back(sel.assignment);
    return sel;
  }

  // Inertia at K-1 feeds the elbow tie-break for the smallest K.
  double below = k_min > 1 ? kmeans(points, k_min - 1, seed, options).inertia : 0.0;
  int best = -1;
  double best_drop = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    auto a = kmeans(points, k, seed, options);
    const double drop = below > 0.0 ? (below - a.inertia) / below : 0.0;
    below = a.inertia;
    sel.candidates.push_back(std::move(a));
    const auto& cand = sel.candidates.back();
    if (best < 0) {
      best = 0;
      best_drop = drop;
      continue;
    }
    const auto& incumbent = sel.candidates[static_cast<std::size_t>(best)];
    const double diff = cand.silhouette - incumbent.silhouette;
    if (diff > kSilhouetteTieTolerance || (std::abs(diff) <= kSilhouetteTieTolerance && drop > best_drop)) {
      best = static_cast<int>(sel.candidates.size()) - 1;
      best_drop = drop;
    }
  }
  sel.assignment = sel.candidates[static_cast<std::size_t>(best)];
  sel.k = sel.assignment.k;
  return sel;
}

}  // namespace enclip::cluster
