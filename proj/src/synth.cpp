#include "visampler/synth.hpp"

#include <cmath>
#include <cstdio>

namespace visampler {

namespace {

std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
  return buf;
}

}  // namespace

Matrix modality_rotation(std::size_t m, double offset, Rng& rng) {
  Matrix a(m, m);
  const double scale = offset / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) = (i == j ? 1.0 : 0.0) + scale * rng.normal();
  }
  // Modified Gram-Schmidt over columns.
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) dot += a(i, k) * a(i, j);
      for (std::size_t i = 0; i < m; ++i) a(i, j) -= dot * a(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < m; ++i) a(i, j) /= norm;
  }
  return a;
}

SynthDataset generate(const SynthConfig& config) {
  if (config.n_prototypes == 0 || config.photos_per_prototype == 0 || config.raw_dim == 0) {
    throw ContractViolation("synthetic config sizes must be positive");
  }
  if (config.photo_noise < 0.0 || config.sketch_noise < 0.0 || config.modality_offset < 0.0) {
    throw ContractViolation("synthetic noise and offset must be non-negative");
  }
  const std::size_t m = config.raw_dim;
  const std::size_t n = config.n_prototypes * config.photos_per_prototype;

  Rng transform_rng(derive(config.seed, "synth_transform"));
  const Matrix rotation = modality_rotation(m, config.modality_offset, transform_rng);
  Vector offset(m);
  for (double& v : offset) v = config.modality_offset * transform_rng.normal();

  Rng rng(derive(config.seed, "synth_samples"));
  Matrix prototypes(config.n_prototypes, m);
  for (double& v : prototypes.data()) v = rng.normal();

  std::vector<std::string> photo_ids, sketch_ids;
  std::vector<double> photo_data, sketch_data;
  photo_data.reserve(n * m);
  sketch_data.reserve(n * m);
  std::map<std::string, std::string> pairs;
  Vector photo(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto proto = prototypes.row(i / config.photos_per_prototype);
    for (std::size_t j = 0; j < m; ++j) photo[j] = proto[j] + config.photo_noise * rng.normal();
    for (std::size_t r = 0; r < m; ++r) {
      double acc = offset[r];
      for (std::size_t j = 0; j < m; ++j) acc += rotation(r, j) * photo[j];
      sketch_data.push_back(acc + config.sketch_noise * rng.normal());
    }
    photo_data.insert(photo_data.end(), photo.begin(), photo.end());
    photo_ids.push_back(make_id('p', i));
    sketch_ids.push_back(make_id('s', i));
    pairs.emplace(photo_ids.back(), sketch_ids.back());
  }
  return SynthDataset{
      EmbeddingMatrix(std::move(photo_ids), m, std::move(photo_data), Modality::photo),
      EmbeddingMatrix(std::move(sketch_ids), m, std::move(sketch_data), Modality::sketch),
      Pairing(std::move(pairs))};
}

}  // namespace visampler
