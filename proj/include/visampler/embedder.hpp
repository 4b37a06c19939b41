#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "visampler/core.hpp"
#include "visampler/rng.hpp"

namespace visampler {

/// Guard inside the normalization norm: y = z / sqrt(|z|^2 + eps).
inline constexpr double kNormEpsilon = 1e-12;

struct AffineMap {
  Matrix weight;  // embed_dim x raw_dim
  Vector bias;    // embed_dim

  Vector apply(std::span<const double> raw) const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

/// One affine map per modality followed by L2 normalization.
class CrossModalEmbedder {
 public:
  CrossModalEmbedder(AffineMap photo, AffineMap sketch, double margin);

  /// Both branches start as the identity map (raw_dim == embed_dim).
  static CrossModalEmbedder identity(std::size_t dim, double margin);
  /// Both branches share one Gaussian projection with variance 1/raw_dim
  /// and zero bias.
  static CrossModalEmbedder random(std::size_t raw_dim, std::size_t embed_dim, double margin,
                                   Seed seed);

  std::size_t raw_dim() const { return photo_.weight.cols(); }
  std::size_t embed_dim() const { return photo_.weight.rows(); }
  double margin() const { return margin_; }
  const AffineMap& map(Modality m) const { return m == Modality::photo ? photo_ : sketch_; }

  /// Normalized embedding. Throws ContractViolation on a wrong raw dim or
  /// when the affine image is exactly zero.
  Vector embed(std::span<const double> raw, Modality modality) const;

  /// Embeds every row; the result keeps the IDs and modality of `raw`.
  EmbeddingMatrix embed_all(const EmbeddingMatrix& raw) const;

  /// Flattened as photo weight, photo bias, sketch weight, sketch bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  AdamState& optimizer_state() { return adam_; }
  const AdamState& optimizer_state() const { return adam_; }

  friend bool operator==(const CrossModalEmbedder& a, const CrossModalEmbedder& b) {
    return a.parameters() == b.parameters() && a.margin_ == b.margin_;
  }

 private:
  AffineMap photo_;
  AffineMap sketch_;
  double margin_;
  AdamState adam_;
};

/// max(0, |a - p| - |a - n| + margin) on already-embedded vectors.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

/// Raw-feature triplet: a sketch, its paired photo and a non-matching photo.
struct Triplet {
  std::span<const double> anchor_sketch;
  std::span<const double> positive_photo;
  std::span<const double> negative_photo;
};

/// Triplet loss through the model; adds `weight * dLoss/dParams` into
/// `grad` (sized parameter_count()) and returns the loss.
double triplet_objective(const CrossModalEmbedder& model, const Triplet& t,
                         std::span<double> grad, double weight = 1.0);

enum class InitScheme { random, identity };

struct TrainConfig {
  std::size_t embed_dim = 32;
  int epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 1e-4;
  double margin = 0.3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  InitScheme init = InitScheme::random;
  Seed seed{};
};

struct TrainResult {
  CrossModalEmbedder model;
  std::vector<double> epoch_loss;  // mean triplet loss seen during each epoch
  double final_loss = 0.0;
};

/// Fits a fresh model on index-aligned raw photo/sketch pairs with in-batch
/// uniformly drawn negatives and Adam. Needs at least two pairs.
TrainResult train(const EmbeddingMatrix& raw_photos, const EmbeddingMatrix& raw_sketches,
                  const TrainConfig& config);

/// Continues training `model` (including its optimizer state).
TrainResult train_from(CrossModalEmbedder model, const EmbeddingMatrix& raw_photos,
                       const EmbeddingMatrix& raw_sketches, const TrainConfig& config);

/// Checkpoint layout is documented in docs/checkpoint_format.md.
void save_checkpoint(const CrossModalEmbedder& model, const std::filesystem::path& path);
CrossModalEmbedder load_checkpoint(const std::filesystem::path& path);

}  // namespace visampler
