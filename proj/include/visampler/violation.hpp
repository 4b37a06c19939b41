#pragma once

#include <span>
#include <string>
#include <vector>

#include "visampler/core.hpp"

namespace visampler {

/// Guard added to every candidate-to-sketch distance in the denominator.
inline constexpr double kViEpsilon = 1e-12;

/// Violation-index scores for an unlabeled pool, aligned with its rows.
struct ViScores {
  std::vector<std::string> ids;
  std::vector<double> vi;
  /// True where the candidate coincided with some labeled sketch, so the
  /// epsilon guard alone kept the term finite.
  std::vector<bool> degenerate;
  std::size_t n_labeled_used = 0;
};

struct ViValue {
  double value = 0.0;
  bool degenerate = false;
};

/// Mean over labeled pairs of |photo_i - sketch_i| / (|candidate - sketch_i| + eps).
///
/// Large values mean the candidate sits closer to existing sketches than
/// their own photos do. Throws ContractViolation for an empty pool or a
/// dimension mismatch.
ViValue violation_index_detail(std::span<const double> candidate, const LabeledPool& labeled);

double violation_index(std::span<const double> candidate, const LabeledPool& labeled);

ViScores score_pool(const UnlabeledPool& unlabeled, const LabeledPool& labeled);

/// |candidate - sketch_i|^2 <= |photo_i - sketch_i|^2, i.e. the candidate
/// would sit at least as close to sketch i as its own photo.
bool violates(std::span<const double> candidate, std::size_t pair_index,
              const LabeledPool& labeled);

}  // namespace visampler
