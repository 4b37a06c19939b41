#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "visampler/core.hpp"
#include "visampler/rng.hpp"

namespace visampler {

struct Clustering {
  std::size_t k = 0;
  Matrix centroids;                     // k x d
  std::vector<std::size_t> assignment;  // cluster index per input row
  double inertia = 0.0;                 // sum of squared distances to assigned centroid
  std::vector<double> inertia_history;  // after every assignment step
  int iterations = 0;                   // centroid update steps performed

  std::vector<std::size_t> cluster_sizes() const;
  /// Row indices of each cluster's members, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

/// k-means++ seeding; returns the chosen row indices in pick order.
///
/// Candidates are visited in ascending-ID order, so reordering the rows of
/// `points` does not change which IDs are chosen. If every remaining
/// squared distance is zero the next pick falls back to a uniform draw over
/// not-yet-chosen rows. `first` forces the first centre.
std::vector<std::size_t> kmeanspp_seed_indices(const EmbeddingMatrix& points, std::size_t k,
                                               Rng& rng,
                                               std::optional<std::size_t> first = std::nullopt);

/// k x d matrix of initial centroids.
Matrix kmeanspp_seed(const EmbeddingMatrix& points, std::size_t k, Seed seed);

/// Lloyd refinement. Assignment ties go to the lowest centroid index; a
/// cluster left empty is re-seeded at the point farthest from its current
/// centroid. Stops when the largest centroid move is below `tol` or after
/// `max_iter` updates.
Clustering lloyd(const EmbeddingMatrix& points, const Matrix& init_centroids,
                 int max_iter = 100, double tol = 1e-6);

/// kmeanspp_seed followed by lloyd.
Clustering kmeans(const EmbeddingMatrix& points, std::size_t k, Seed seed, int max_iter = 100,
                  double tol = 1e-6);

}  // namespace visampler
