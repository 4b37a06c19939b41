#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "visampler/core.hpp"
#include "visampler/rng.hpp"
#include "visampler/violation.hpp"

namespace visampler {

enum class Strategy { random, kmeans_centroid, coreset, vi_min, vi_max, vi_ensemble, vi_diverse };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);
const std::vector<Strategy>& all_strategies();

/// Inputs to one acquisition step. Holds references; the pools must outlive it.
struct SamplingRequest {
  const LabeledPool& labeled;
  const UnlabeledPool& unlabeled;
  std::size_t budget = 1;
  /// Fraction of the budget drawn from the minimum-VI side
  /// (vi_ensemble / vi_diverse only).
  double alpha = 0.0;
  Seed seed{};
  Strategy strategy = Strategy::random;
  int lloyd_max_iter = 100;
  double lloyd_tol = 1e-6;
};

/// Exactly `budget` distinct unlabeled photo IDs, in selection order.
struct QuerySet {
  std::vector<std::string> ids;
};

/// Number of picks taken from the minimum-VI side: round(alpha * budget),
/// halves rounded away from zero.
std::size_t min_side_count(double alpha, std::size_t budget);

QuerySet sample_random(const SamplingRequest& req);
QuerySet sample_kmeans_centroid(const SamplingRequest& req);
QuerySet sample_coreset(const SamplingRequest& req);
QuerySet sample_vi_ensemble(const SamplingRequest& req);
QuerySet sample_vi_diverse(const SamplingRequest& req);

/// Dispatches on req.strategy and validates the result.
QuerySet select(const SamplingRequest& req);

/// Unlabeled rows ordered by (VI ascending, ID ascending).
std::vector<std::size_t> order_by_vi_ascending(const ViScores& scores);
/// Unlabeled rows ordered by (VI descending, ID ascending).
std::vector<std::size_t> order_by_vi_descending(const ViScores& scores);

/// Throws ContractViolation unless `q` holds `budget` distinct IDs of `pool`.
void validate_query_set(const QuerySet& q, const UnlabeledPool& pool, std::size_t budget);

}  // namespace visampler
