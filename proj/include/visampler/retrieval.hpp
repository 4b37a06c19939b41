#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "visampler/core.hpp"

namespace visampler {

struct RetrievalResult {
  /// Top-q gallery IDs per query sketch (q = largest requested cutoff).
  std::map<std::string, std::vector<std::string>> ranked;
  /// q -> fraction of sketches whose true photo is in the top q.
  std::map<std::size_t, double> acc_at;
};

/// The q gallery IDs nearest to `sketch`, ascending distance, ties broken by
/// lower ID. Requires 1 <= q <= gallery size.
std::vector<std::string> retrieve(std::span<const double> sketch, const EmbeddingMatrix& gallery,
                                  std::size_t q);

/// Fraction of sketches whose paired photo appears in retrieve(sketch, q).
double acc_at_q(const EmbeddingMatrix& sketches, const EmbeddingMatrix& gallery,
                const Pairing& truth, std::size_t q);

/// acc@q for several cutoffs in one pass over the sketches.
RetrievalResult evaluate_retrieval(const EmbeddingMatrix& sketches, const EmbeddingMatrix& gallery,
                                   const Pairing& truth, std::span<const std::size_t> qs);

}  // namespace visampler
