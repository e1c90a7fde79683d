#include "enclip/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace enclip::dimred {

namespace {

constexpr int kBandwidthSteps = 50;
constexpr double kEntropyTolerance = 1e-5;
constexpr double kProbabilityFloor = 1e-12;
constexpr double kMinGain = 0.01;
constexpr int kKlEvery = 10;

std::vector<double> squared_distances(std::span<const float> points, std::size_t n, std::size_t dim) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = static_cast<double>(points[i * dim + c]) - points[j * dim + c];
        s += diff * diff;
      }
      d[i * n + j] = d[j * n + i] = s;
    }
  }
  return d;
}

// Conditional distribution of row i at precision beta. Distances are shifted by
// their minimum so the largest kernel value is exactly 1. Returns the entropy.
double row_entropy(std::span<const double> dist, std::size_t self, double dmin, double beta,
                   std::span<double> p) {
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (j == self) {
      p[j] = 0.0;
      continue;
    }
    const double shifted = dist[j] - dmin;
    p[j] = std::exp(-shifted * beta);
    sum += p[j];
    weighted += shifted * p[j];
  }
  for (auto& v : p) v /= sum;
  return std::log(sum) + beta * weighted / sum;
}

void conditional_row(std::span<const double> dist, std::size_t self, double perplexity, std::span<double> p) {
  const std::size_t n = dist.size();
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != self) dmin = std::min(dmin, dist[j]);
  }
  const double target = std::log(perplexity);
  double beta = 1.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double h = row_entropy(dist, self, dmin, beta, p);
  for (int step = 0; step < kBandwidthSteps && std::isfinite(h) && std::abs(h - target) > kEntropyTolerance;
       ++step) {
    if (h > target) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
    }
    h = row_entropy(dist, self, dmin, beta, p);
  }
  const bool finite = std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
  if (!std::isfinite(h) || !finite) {
    // Degenerate row: spread the mass uniformly over the other points.
    for (std::size_t j = 0; j < n; ++j) p[j] = j == self ? 0.0 : 1.0 / static_cast<double>(n - 1);
  }
}

void require_finite(std::span<const float> points) {
  if (!std::all_of(points.begin(), points.end(), [](float v) { return std::isfinite(v); })) {
    throw DimredError("t-SNE input contains a non-finite value");
  }
}

}  // namespace

double effective_perplexity(double requested, std::size_t n) {
  const double cap = std::max(2.0, std::floor((static_cast<double>(n) - 1.0) / 3.0));
  return std::min(requested, cap);
}

std::vector<double> joint_affinities(std::span<const float> points, std::size_t n, std::size_t dim,
                                     double perplexity) {
  if (points.size() != n * dim) throw DimredError("point buffer does not match n x dim");
  require_finite(points);
  const auto dist = squared_distances(points, n, dim);
  std::vector<double> cond(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    conditional_row(std::span<const double>(dist).subspan(i * n, n), i, perplexity,
                    std::span<double>(cond).subspan(i * n, n));
  }
  std::vector<double> joint(n * n, 0.0);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) joint[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / denom, kProbabilityFloor);
    }
  }
  return joint;
}

Projection2D tsne_2d(std::span<const float> points, std::size_t n, std::size_t dim, const TsneParams& params) {
  if (n == 0) throw DimredError("t-SNE needs at least one point");
  if (points.size() != n * dim) throw DimredError("point buffer does not match n x dim");
  if (params.iterations < 50) throw DimredError("t-SNE needs at least 50 iterations");
  if (!(params.perplexity > 0.0) || !(params.learning_rate > 0.0)) {
    throw DimredError("perplexity and learning rate must be positive");
  }
  require_finite(points);

  Projection2D out;
  out.perplexity = effective_perplexity(params.perplexity, n);
  if (n == 1) {
    out.coords.push_back({0.0, 0.0});
    return out;
  }

  const auto P = joint_affinities(points, n, dim, out.perplexity);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(n * 2);
  for (auto& v : y) v = 1e-4 * normal(rng);

  std::vector<double> update(n * 2, 0.0);
  std::vector<double> gains(n * 2, 1.0);
  std::vector<double> grad(n * 2, 0.0);
  std::vector<double> num(n * n, 0.0);

  for (int it = 0; it < params.iterations; ++it) {
    const bool exaggerating = it < params.exaggeration_iterations;
    const double exaggeration = exaggerating ? params.early_exaggeration : 1.0;
    const double momentum = exaggerating ? params.initial_momentum : params.final_momentum;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[2 * i] - y[2 * j];
        const double dy = y[2 * i + 1] - y[2 * j + 1];
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = v;
        z += 2.0 * v;
      }
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num[i * n + j] / z, kProbabilityFloor);
        const double mult = (exaggeration * P[i * n + j] - q) * num[i * n + j];
        grad[2 * i] += 4.0 * mult * (y[2 * i] - y[2 * j]);
        grad[2 * i + 1] += 4.0 * mult * (y[2 * i + 1] - y[2 * j + 1]);
      }
    }

    for (std::size_t c = 0; c < y.size(); ++c) {
      const bool same_sign = (grad[c] > 0.0) == (update[c] > 0.0);
      gains[c] = same_sign ? gains[c] * 0.8 : gains[c] + 0.2;
      gains[c] = std::max(gains[c], kMinGain);
      update[c] = momentum * update[c] - params.learning_rate * gains[c] * grad[c];
      y[c] += update[c];
    }

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
      if (!std::isfinite(y[2 * i]) || !std::isfinite(y[2 * i + 1])) {
        throw DimredError("t-SNE diverged at iteration " + std::to_string(it));
      }
    }

    const bool last = it + 1 == params.iterations;
    if (!exaggerating && ((it + 1) % kKlEvery == 0 || last)) {
      // KL of the embedding the gradient above was computed for.
      double kl = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const double p = P[i * n + j];
          kl += p * std::log(p / std::max(num[i * n + j] / z, kProbabilityFloor));
        }
      }
      out.kl_trace.push_back({it, kl});
    }
  }

  out.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.coords[i] = {y[2 * i], y[2 * i + 1]};
  return out;
}

double trustworthiness(std::span<const double> high, std::size_t dim, std::span<const double> low,
                       std::size_t low_dim, std::size_t n, std::size_t k) {
  if (n < 4) throw DimredError("trustworthiness needs at least 4 points");
  if (k < 1 || 2 * k >= n) throw DimredError("trustworthiness needs 1 <= k < n/2");
  if (high.size() != n * dim || low.size() != n * low_dim) throw DimredError("matrix shape mismatch");

  auto dist2 = [](std::span<const double> m, std::size_t d, std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = m[a * d + c] - m[b * d + c];
      s += diff * diff;
    }
    return s;
  };

  auto neighbor_order = [&](std::span<const double> m, std::size_t d, std::size_t i) {
    std::vector<std::size_t> order;
    std::vector<double> dist(n);
    for (std::size_t j = 0; j < n; ++j) {
      dist[j] = dist2(m, d, i, j);
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return order;
  };

  double penalty = 0.0;
  std::vector<std::size_t> high_rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto high_order = neighbor_order(high, dim, i);
    for (std::size_t r = 0; r < high_order.size(); ++r) high_rank[high_order[r]] = r + 1;
    const auto low_order = neighbor_order(low, low_dim, i);
    for (std::size_t r = 0; r < k; ++r) {
      const auto rank = high_rank[low_order[r]];
      if (rank > k) penalty += static_cast<double>(rank - k);
    }
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace enclip::dimred
