#pragma once

// Seeded generators and independent reference implementations shared by the
// unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "visampler/core.hpp"
#include "visampler/rng.hpp"

namespace visampler::testing {

inline std::string make_id(char prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  return std::string(1, prefix) + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') +
         digits;
}

inline std::vector<std::string> make_ids(char prefix, std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(make_id(prefix, i));
  return ids;
}

inline EmbeddingMatrix random_matrix(Rng& rng, char prefix, std::size_t n, std::size_t d,
                                     Modality m = Modality::photo, double scale = 1.0) {
  std::vector<double> data(n * d);
  for (double& v : data) v = scale * rng.normal();
  return EmbeddingMatrix(make_ids(prefix, n), d, std::move(data), m);
}

inline EmbeddingMatrix from_rows(char prefix, const std::vector<std::vector<double>>& rows,
                                 Modality m = Modality::photo) {
  std::vector<double> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return EmbeddingMatrix(make_ids(prefix, rows.size()), rows.empty() ? 1 : rows[0].size(),
                         std::move(data), m);
}

inline LabeledPool random_labeled(Rng& rng, std::size_t n, std::size_t d, double scale = 1.0) {
  return LabeledPool(random_matrix(rng, 'p', n, d, Modality::photo, scale),
                     random_matrix(rng, 's', n, d, Modality::sketch, scale));
}

inline UnlabeledPool random_unlabeled(Rng& rng, std::size_t n, std::size_t d,
                                      double scale = 1.0) {
  return UnlabeledPool{random_matrix(rng, 'u', n, d, Modality::photo, scale)};
}

/// Plain double loop over the defining formula, written without any of the
/// library's distance helpers.
inline double oracle_vi(const std::vector<double>& cand, const LabeledPool& labeled) {
  const std::size_t d = labeled.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = labeled.photos.row(i)[j] - labeled.sketches.row(i)[j];
      const double b = cand[j] - labeled.sketches.row(i)[j];
      num += a * a;
      den += b * b;
    }
    total += std::sqrt(num) / (std::sqrt(den) + 1e-12);
  }
  return total / static_cast<double>(labeled.size());
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Greedy k-center by exhaustive recomputation of every min-distance each step.
inline std::vector<std::size_t> oracle_coreset(const std::vector<std::vector<double>>& labeled,
                                               const std::vector<std::vector<double>>& pool,
                                               std::size_t k) {
  // Unsquared Euclidean distance, as the selection rule is defined; squared
  // distances round differently on exact ties such as two points either side
  // of their mean.
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
  };
  std::vector<std::vector<double>> centers = labeled;
  std::vector<bool> taken(pool.size(), false);
  std::vector<std::size_t> out;
  if (centers.empty()) {
    // No labeled photos: start from the point farthest from the pool mean.
    std::vector<double> mean(pool[0].size(), 0.0);
    for (const auto& p : pool)
      for (std::size_t j = 0; j < p.size(); ++j) mean[j] += p[j];
    for (double& v : mean) v /= static_cast<double>(pool.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (dist(pool[i], mean) > dist(pool[best], mean)) best = i;
    centers.push_back(pool[best]);
    taken[best] = true;
    out.push_back(best);
  }
  while (out.size() < k) {
    std::size_t best = pool.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      double m = INFINITY;
      for (const auto& c : centers) m = std::min(m, dist(pool[i], c));
      if (m > best_d) {
        best_d = m;
        best = i;
      }
    }
    taken[best] = true;
    centers.push_back(pool[best]);
    out.push_back(best);
  }
  return out;
}

/// Full stable sort of the gallery by (distance, ID).
inline std::vector<std::string> oracle_rank(const std::vector<double>& query,
                                            const EmbeddingMatrix& gallery) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double diff = query[j] - gallery.row(i)[j];
      s += diff * diff;
    }
    all.emplace_back(std::sqrt(s), gallery.id(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> ids;
  for (auto& [dist, id] : all) ids.push_back(id);
  return ids;
}

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Per-test scratch directory under the system temp dir, removed on exit.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("visampler-test-" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace visampler::testing
