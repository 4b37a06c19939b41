#pragma once

#include "visampler/core.hpp"
#include "visampler/rng.hpp"

namespace visampler {

/// Synthetic photo/sketch raw features.
///
/// Photos are noisy copies of shared prototypes, so each prototype yields
/// a group of look-alike photos. Each sketch is a fixed orthogonal
/// rotation of its photo plus an offset and heavier noise.
struct SynthConfig {
  std::size_t n_prototypes = 40;
  std::size_t photos_per_prototype = 10;
  std::size_t raw_dim = 64;
  double photo_noise = 0.25;
  double sketch_noise = 0.6;
  /// Strength of the photo->sketch modality transform; 0 gives identity.
  double modality_offset = 2.0;
  Seed seed{};
};

struct SynthDataset {
  EmbeddingMatrix photos;    // raw features, modality photo
  EmbeddingMatrix sketches;  // raw features, modality sketch, index-aligned
  Pairing pairing;
};

SynthDataset generate(const SynthConfig& config);

/// Orthogonal matrix from Gram-Schmidt on I + offset * G / sqrt(m) with G
/// standard normal; exactly the identity when offset is 0.
Matrix modality_rotation(std::size_t m, double offset, Rng& rng);

}  // namespace visampler
