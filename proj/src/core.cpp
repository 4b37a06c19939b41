#include "visampler/core.hpp"

#include <cmath>
#include <numbers>

#include "visampler/rng.hpp"

namespace visampler {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::string_view to_string(Modality m) { return m == Modality::photo ? "photo" : "sketch"; }

Modality modality_from_string(std::string_view s) {
  if (s == "photo") return Modality::photo;
  if (s == "sketch") return Modality::sketch;
  throw ContractViolation("unknown modality '" + std::string(s) + "'");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractViolation("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double l2_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractViolation("matrix data size " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
  }
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<double> data, Modality modality, bool normalized)
    : ids_(std::move(ids)), modality_(modality), normalized_(normalized) {
  if (dim == 0) throw ContractViolation("embedding dim must be positive");
  if (data.size() != ids_.size() * dim) {
    throw ContractViolation("embedding data has " + std::to_string(data.size()) +
                            " values, expected " + std::to_string(ids_.size()) + "x" +
                            std::to_string(dim));
  }
  values_ = Matrix(ids_.size(), dim, std::move(data));
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ContractViolation("duplicate embedding id '" + ids_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    for (double v : values_.row(i)) {
      if (!std::isfinite(v)) {
        throw ContractViolation("non-finite value in row '" + ids_[i] + "'");
      }
    }
    if (normalized_ && std::abs(l2_norm(values_.row(i)) - 1.0) > kNormTolerance) {
      throw ContractViolation("row '" + ids_[i] + "' is flagged normalized but has norm " +
                              std::to_string(l2_norm(values_.row(i))));
    }
  }
}

std::size_t EmbeddingMatrix::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ContractViolation("unknown embedding id '" + id + "'");
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> data;
  ids.reserve(rows.size());
  data.reserve(rows.size() * dim());
  for (std::size_t r : rows) {
    if (r >= size()) throw ContractViolation("subset row out of range");
    ids.push_back(ids_[r]);
    auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(std::move(ids), dim(), std::move(data), modality_, normalized_);
}

EmbeddingMatrix EmbeddingMatrix::subset_by_id(std::span<const std::string> ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(index_of(id));
  return subset(rows);
}

EmbeddingMatrix EmbeddingMatrix::normalized() const {
  std::vector<double> data = values_.data();
  for (std::size_t i = 0; i < size(); ++i) {
    const double n = l2_norm(row(i));
    if (n == 0.0) throw ContractViolation("cannot normalize zero row '" + ids_[i] + "'");
    for (std::size_t j = 0; j < dim(); ++j) data[i * dim() + j] /= n;
  }
  return EmbeddingMatrix(ids_, dim(), std::move(data), modality_, true);
}

EmbeddingMatrix EmbeddingMatrix::scaled(double factor) const {
  std::vector<double> data = values_.data();
  for (double& v : data) v *= factor;
  return EmbeddingMatrix(ids_, dim(), std::move(data), modality_,
                         normalized_ && std::abs(std::abs(factor) - 1.0) <= kNormTolerance);
}

Pairing::Pairing(std::map<std::string, std::string> photo_to_sketch)
    : photo_to_sketch_(std::move(photo_to_sketch)) {
  for (const auto& [photo, sketch] : photo_to_sketch_) {
    if (!sketch_to_photo_.emplace(sketch, photo).second) {
      throw ContractViolation("sketch '" + sketch + "' is paired with more than one photo");
    }
  }
}

const std::string& Pairing::sketch_of(const std::string& photo_id) const {
  auto it = photo_to_sketch_.find(photo_id);
  if (it == photo_to_sketch_.end()) {
    throw ContractViolation("no sketch paired with photo '" + photo_id + "'");
  }
  return it->second;
}

const std::string& Pairing::photo_of(const std::string& sketch_id) const {
  auto it = sketch_to_photo_.find(sketch_id);
  if (it == sketch_to_photo_.end()) {
    throw ContractViolation("no photo paired with sketch '" + sketch_id + "'");
  }
  return it->second;
}

LabeledPool::LabeledPool(EmbeddingMatrix p, EmbeddingMatrix s)
    : photos(std::move(p)), sketches(std::move(s)) {
  if (photos.dim() != sketches.dim()) {
    throw ContractViolation("labeled pool photo dim " + std::to_string(photos.dim()) +
                            " != sketch dim " + std::to_string(sketches.dim()));
  }
  if (photos.size() != sketches.size()) {
    throw ContractViolation("labeled pool has " + std::to_string(photos.size()) +
                            " photos but " + std::to_string(sketches.size()) + " sketches");
  }
}

LabeledPool pair_up(const EmbeddingMatrix& photos, const EmbeddingMatrix& sketches,
                    const Pairing& pairing) {
  std::vector<std::string> sketch_ids;
  sketch_ids.reserve(photos.size());
  for (const auto& id : photos.ids()) sketch_ids.push_back(pairing.sketch_of(id));
  return LabeledPool(photos, sketches.subset_by_id(sketch_ids));
}

void check_disjoint(const LabeledPool& labeled, const UnlabeledPool& unlabeled) {
  for (const auto& id : unlabeled.photos.ids()) {
    if (labeled.photos.contains(id)) {
      throw ContractViolation("photo '" + id + "' is in both labeled and unlabeled pools");
    }
  }
}

}  // namespace visampler
