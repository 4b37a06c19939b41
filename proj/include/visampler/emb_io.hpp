#pragma once

// EMB1 embedding files.
//
//   bytes 0-3   ASCII "EMB1"
//   bytes 4-7   N, uint32 little-endian
//   bytes 8-11  d, uint32 little-endian
//   then N*d IEEE-754 binary32 values, little-endian, row-major
//
// IDs, modality and the normalized flag live in a sidecar JSON manifest
// next to the payload: "<stem>.manifest.json" for "<stem>.emb".

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "visampler/core.hpp"

namespace visampler {

enum class EmbIoErrorKind {
  io,
  bad_magic,
  truncated,
  trailing_bytes,
  count_mismatch,
  dim_mismatch,
  duplicate_ids,
  bad_manifest,
  invalid_values,
};

std::string_view to_string(EmbIoErrorKind kind);

class EmbIoError : public std::runtime_error {
 public:
  EmbIoError(EmbIoErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  EmbIoErrorKind kind() const { return kind_; }

 private:
  EmbIoErrorKind kind_;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& emb_path);

/// Serializes the payload (header + float32 rows) without touching disk.
std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& matrix);

struct Emb1Payload {
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<double> values;
};

Emb1Payload decode_emb1(std::span<const std::uint8_t> bytes);

/// Writes "<path>" and its manifest. Values are stored as float32, so a
/// matrix round-trips bit-exactly when its entries are float-representable.
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// Reads an EMB1 file plus manifest. When the manifest flags the matrix as
/// normalized the row norms are validated.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// pairs.json: a JSON object mapping photo ID -> sketch ID.
void save_pairing(const Pairing& pairing, const std::filesystem::path& path);
Pairing load_pairing(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace visampler
