#include "visampler/violation.hpp"

namespace visampler {

namespace {

void require_compatible(std::size_t candidate_dim, const LabeledPool& labeled) {
  if (labeled.size() == 0) throw ContractViolation("violation index needs a non-empty labeled pool");
  if (candidate_dim != labeled.dim()) {
    throw ContractViolation("candidate dim " + std::to_string(candidate_dim) +
                            " != labeled pool dim " + std::to_string(labeled.dim()));
  }
}

std::vector<double> paired_distances(const LabeledPool& labeled) {
  std::vector<double> out(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    out[i] = euclidean_distance(labeled.photos.row(i), labeled.sketches.row(i));
  }
  return out;
}

ViValue evaluate(std::span<const double> candidate, const LabeledPool& labeled,
                 const std::vector<double>& paired) {
  ViValue result;
  double sum = 0.0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const double to_sketch = euclidean_distance(candidate, labeled.sketches.row(i));
    if (to_sketch == 0.0) result.degenerate = true;
    sum += paired[i] / (to_sketch + kViEpsilon);
  }
  result.value = sum / static_cast<double>(labeled.size());
  return result;
}

}  // namespace

ViValue violation_index_detail(std::span<const double> candidate, const LabeledPool& labeled) {
  require_compatible(candidate.size(), labeled);
  return evaluate(candidate, labeled, paired_distances(labeled));
}

double violation_index(std::span<const double> candidate, const LabeledPool& labeled) {
  return violation_index_detail(candidate, labeled).value;
}

ViScores score_pool(const UnlabeledPool& unlabeled, const LabeledPool& labeled) {
  require_compatible(unlabeled.dim(), labeled);
  const auto paired = paired_distances(labeled);
  ViScores scores;
  scores.ids = unlabeled.photos.ids();
  scores.vi.resize(unlabeled.size());
  scores.degenerate.resize(unlabeled.size());
  scores.n_labeled_used = labeled.size();
  for (std::size_t j = 0; j < unlabeled.size(); ++j) {
    const auto v = evaluate(unlabeled.photos.row(j), labeled, paired);
    scores.vi[j] = v.value;
    scores.degenerate[j] = v.degenerate;
  }
  return scores;
}

bool violates(std::span<const double> candidate, std::size_t pair_index,
              const LabeledPool& labeled) {
  if (pair_index >= labeled.size()) {
    throw ContractViolation("pair index " + std::to_string(pair_index) + " out of range for " +
                            std::to_string(labeled.size()) + " labeled pairs");
  }
  const auto sketch = labeled.sketches.row(pair_index);
  return squared_distance(candidate, sketch) <=
         squared_distance(labeled.photos.row(pair_index), sketch);
}

}  // namespace visampler
