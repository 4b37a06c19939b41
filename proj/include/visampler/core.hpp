#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace visampler {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Modality { photo, sketch };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

using Vector = std::vector<double>;

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Unsquared Euclidean distance. Throws ContractViolation on dim mismatch.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> a);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// N rows of d-dimensional finite vectors from one modality, each row
/// carrying a unique opaque string ID. Immutable once constructed.
class EmbeddingMatrix {
 public:
  static constexpr double kNormTolerance = 1e-6;

  EmbeddingMatrix() : EmbeddingMatrix({}, 1, {}, Modality::photo) {}

  /// Validates every invariant; throws ContractViolation on failure.
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<double> data,
                  Modality modality, bool normalized = false);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return values_.cols(); }
  Modality modality() const { return modality_; }
  bool is_normalized() const { return normalized_; }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  const Matrix& values() const { return values_; }

  bool contains(const std::string& id) const { return index_.contains(id); }
  /// Row index for an ID; throws ContractViolation when absent.
  std::size_t index_of(const std::string& id) const;

  /// Rows in the given order (indices may not repeat).
  EmbeddingMatrix subset(std::span<const std::size_t> rows) const;
  EmbeddingMatrix subset_by_id(std::span<const std::string> ids) const;

  /// Row-wise L2 normalization; zero rows are rejected.
  EmbeddingMatrix normalized() const;

  EmbeddingMatrix scaled(double factor) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.ids_ == b.ids_ && a.values_ == b.values_ && a.modality_ == b.modality_ &&
           a.normalized_ == b.normalized_;
  }

 private:
  std::vector<std::string> ids_;
  Matrix values_;
  Modality modality_ = Modality::photo;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Photo ID -> sketch ID ground-truth correspondence (one sketch per photo).
class Pairing {
 public:
  Pairing() = default;
  explicit Pairing(std::map<std::string, std::string> photo_to_sketch);

  std::size_t size() const { return photo_to_sketch_.size(); }
  bool has_photo(const std::string& photo_id) const {
    return photo_to_sketch_.contains(photo_id);
  }
  bool has_sketch(const std::string& sketch_id) const {
    return sketch_to_photo_.contains(sketch_id);
  }
  const std::string& sketch_of(const std::string& photo_id) const;
  const std::string& photo_of(const std::string& sketch_id) const;
  const std::map<std::string, std::string>& entries() const { return photo_to_sketch_; }

  friend bool operator==(const Pairing& a, const Pairing& b) {
    return a.photo_to_sketch_ == b.photo_to_sketch_;
  }

 private:
  std::map<std::string, std::string> photo_to_sketch_;
  std::map<std::string, std::string> sketch_to_photo_;
};

/// Index-aligned photo/sketch embeddings: row i of photos pairs with row i
/// of sketches.
struct LabeledPool {
  EmbeddingMatrix photos;
  EmbeddingMatrix sketches;

  LabeledPool() : photos({}, 1, {}, Modality::photo), sketches({}, 1, {}, Modality::sketch) {}
  LabeledPool(EmbeddingMatrix photos, EmbeddingMatrix sketches);

  std::size_t size() const { return photos.size(); }
  std::size_t dim() const { return photos.dim(); }
};

/// Photos whose sketches have not been acquired yet.
struct UnlabeledPool {
  EmbeddingMatrix photos;

  std::size_t size() const { return photos.size(); }
  std::size_t dim() const { return photos.dim(); }
};

/// Aligns each photo with its paired sketch; every photo must have one.
LabeledPool pair_up(const EmbeddingMatrix& photos, const EmbeddingMatrix& sketches,
                    const Pairing& pairing);

/// Throws ContractViolation if any photo ID occurs in both pools.
void check_disjoint(const LabeledPool& labeled, const UnlabeledPool& unlabeled);

}  // namespace visampler
