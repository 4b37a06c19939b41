#include "visampler/clustering.hpp"

#include <algorithm>
#include <numeric>

namespace visampler {

namespace {

// Row indices sorted by ID; every loop that feeds a random draw or a
// floating-point sum walks this order.
std::vector<std::size_t> canonical_order(const EmbeddingMatrix& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points.id(a) < points.id(b); });
  return order;
}

struct Assignment {
  std::vector<std::size_t> cluster;
  std::vector<double> sq_dist;
  double inertia = 0.0;
};

Assignment assign(const EmbeddingMatrix& points, const Matrix& centroids,
                  const std::vector<std::size_t>& order) {
  Assignment out;
  out.cluster.assign(points.size(), 0);
  out.sq_dist.assign(points.size(), 0.0);
  for (std::size_t i : order) {
    double best = squared_distance(points.row(i), centroids.row(0));
    std::size_t best_c = 0;
    for (std::size_t c = 1; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    out.cluster[i] = best_c;
    out.sq_dist[i] = best;
    out.inertia += best;
  }
  return out;
}

Matrix update_centroids(const EmbeddingMatrix& points, const Assignment& current,
                        std::size_t k, const std::vector<std::size_t>& order) {
  const std::size_t dim = points.dim();
  Matrix sums(k, dim);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i : order) {
    auto dst = sums.row(current.cluster[i]);
    auto src = points.row(i);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    ++counts[current.cluster[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  }

  // Empty clusters take the point farthest from its (updated) centroid,
  // drawn from clusters that can spare a member.
  std::vector<bool> used(points.size(), false);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::optional<std::size_t> pick;
    double pick_dist = -1.0;
    for (std::size_t i : order) {
      const std::size_t owner = current.cluster[i];
      if (used[i] || counts[owner] < 2) continue;
      const double d = squared_distance(points.row(i), sums.row(owner));
      if (d > pick_dist) {
        pick_dist = d;
        pick = i;
      }
    }
    if (!pick) continue;
    used[*pick] = true;
    --counts[current.cluster[*pick]];
    counts[c] = 1;
    std::copy(points.row(*pick).begin(), points.row(*pick).end(), sums.row(c).begin());
  }
  return sums;
}

}  // namespace

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t c : assignment) ++sizes[c];
  return sizes;
}

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

std::vector<std::size_t> kmeanspp_seed_indices(const EmbeddingMatrix& points, std::size_t k,
                                               Rng& rng, std::optional<std::size_t> first) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) {
    throw ContractViolation("k-means++ needs 1 <= k <= N, got k=" + std::to_string(k) +
                            " N=" + std::to_string(n));
  }
  if (first && *first >= n) throw ContractViolation("forced first centre out of range");

  const auto order = canonical_order(points);
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<bool> is_chosen(n, false);
  chosen.push_back(first ? *first : order[rng.uniform_index(n)]);
  is_chosen[chosen.back()] = true;

  std::vector<double> min_d2(n);
  for (std::size_t i = 0; i < n; ++i) min_d2[i] = squared_distance(points.row(i), points.row(chosen[0]));

  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i : order) {
      if (!is_chosen[i]) total += min_d2[i];
    }
    std::optional<std::size_t> pick;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double cumulative = 0.0;
      for (std::size_t i : order) {
        if (is_chosen[i] || min_d2[i] == 0.0) continue;
        cumulative += min_d2[i];
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      std::vector<std::size_t> remaining;
      for (std::size_t i : order) {
        if (!is_chosen[i]) remaining.push_back(i);
      }
      pick = remaining[rng.uniform_index(remaining.size())];
    }
    chosen.push_back(*pick);
    is_chosen[*pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], squared_distance(points.row(i), points.row(*pick)));
    }
  }
  return chosen;
}

Matrix kmeanspp_seed(const EmbeddingMatrix& points, std::size_t k, Seed seed) {
  Rng rng(seed);
  const auto idx = kmeanspp_seed_indices(points, k, rng);
  Matrix centroids(k, points.dim());
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(points.row(idx[c]).begin(), points.row(idx[c]).end(), centroids.row(c).begin());
  }
  return centroids;
}

Clustering lloyd(const EmbeddingMatrix& points, const Matrix& init_centroids, int max_iter,
                 double tol) {
  if (init_centroids.rows() == 0) throw ContractViolation("lloyd needs at least one centroid");
  if (init_centroids.cols() != points.dim()) {
    throw ContractViolation("centroid dim " + std::to_string(init_centroids.cols()) +
                            " != point dim " + std::to_string(points.dim()));
  }
  const auto order = canonical_order(points);
  Clustering result;
  result.k = init_centroids.rows();
  result.centroids = init_centroids;
  if (points.empty()) return result;

  auto current = assign(points, result.centroids, order);
  result.inertia_history.push_back(current.inertia);

  for (int it = 0; it < max_iter; ++it) {
    Matrix next = update_centroids(points, current, result.k, order);
    double movement = 0.0;
    for (std::size_t c = 0; c < result.k; ++c) {
      movement = std::max(movement, euclidean_distance(next.row(c), result.centroids.row(c)));
    }
    result.centroids = std::move(next);
    ++result.iterations;
    const double previous = current.inertia;
    current = assign(points, result.centroids, order);
    result.inertia_history.push_back(current.inertia);
    if (current.inertia > previous * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("lloyd: inertia increased from " + std::to_string(previous) +
                             " to " + std::to_string(current.inertia));
    }
    if (movement < tol) break;
  }
  result.assignment = std::move(current.cluster);
  result.inertia = current.inertia;
  return result;
}

Clustering kmeans(const EmbeddingMatrix& points, std::size_t k, Seed seed, int max_iter,
                  double tol) {
  return lloyd(points, kmeanspp_seed(points, k, seed), max_iter, tol);
}

}  // namespace visampler
