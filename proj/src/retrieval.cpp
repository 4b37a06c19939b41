#include "visampler/retrieval.hpp"

#include <algorithm>
#include <numeric>

namespace visampler {

namespace {

void require_truth(const EmbeddingMatrix& sketches, const EmbeddingMatrix& gallery,
                   const Pairing& truth) {
  if (sketches.dim() != gallery.dim()) {
    throw ContractViolation("sketch dim " + std::to_string(sketches.dim()) +
                            " != gallery dim " + std::to_string(gallery.dim()));
  }
  for (const auto& id : sketches.ids()) {
    const auto& photo = truth.photo_of(id);
    if (!gallery.contains(photo)) {
      throw ContractViolation("true match '" + photo + "' of sketch '" + id +
                              "' is not in the gallery");
    }
  }
}

}  // namespace

std::vector<std::string> retrieve(std::span<const double> sketch, const EmbeddingMatrix& gallery,
                                  std::size_t q) {
  if (q < 1 || q > gallery.size()) {
    throw ContractViolation("retrieve needs 1 <= q <= " + std::to_string(gallery.size()) +
                            ", got " + std::to_string(q));
  }
  if (sketch.size() != gallery.dim()) {
    throw ContractViolation("query dim " + std::to_string(sketch.size()) + " != gallery dim " +
                            std::to_string(gallery.dim()));
  }
  std::vector<double> dist(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    dist[i] = euclidean_distance(sketch, gallery.row(i));
  }
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return gallery.id(a) < gallery.id(b);
                    });
  std::vector<std::string> out;
  out.reserve(q);
  for (std::size_t i = 0; i < q; ++i) out.push_back(gallery.id(order[i]));
  return out;
}

double acc_at_q(const EmbeddingMatrix& sketches, const EmbeddingMatrix& gallery,
                const Pairing& truth, std::size_t q) {
  const std::size_t qs[] = {q};
  return evaluate_retrieval(sketches, gallery, truth, qs).acc_at.at(q);
}

RetrievalResult evaluate_retrieval(const EmbeddingMatrix& sketches, const EmbeddingMatrix& gallery,
                                   const Pairing& truth, std::span<const std::size_t> qs) {
  if (qs.empty()) throw ContractViolation("no retrieval cutoffs requested");
  require_truth(sketches, gallery, truth);
  const std::size_t q_max = *std::max_element(qs.begin(), qs.end());

  RetrievalResult result;
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t q : qs) hits[q] = 0;
  for (std::size_t s = 0; s < sketches.size(); ++s) {
    auto top = retrieve(sketches.row(s), gallery, q_max);
    const auto& target = truth.photo_of(sketches.id(s));
    const auto pos = static_cast<std::size_t>(std::find(top.begin(), top.end(), target) - top.begin());
    for (auto& [q, h] : hits) {
      if (pos < q) ++h;
    }
    result.ranked.emplace(sketches.id(s), std::move(top));
  }
  for (const auto& [q, h] : hits) {
    result.acc_at[q] =
        sketches.empty() ? 0.0 : static_cast<double>(h) / static_cast<double>(sketches.size());
  }
  return result;
}

}  // namespace visampler
