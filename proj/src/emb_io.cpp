#include "visampler/emb_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace visampler {

namespace {

using nlohmann::json;

constexpr std::uint8_t kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                   text.size()));
}

}  // namespace

std::string_view to_string(EmbIoErrorKind kind) {
  switch (kind) {
    case EmbIoErrorKind::io: return "io";
    case EmbIoErrorKind::bad_magic: return "bad_magic";
    case EmbIoErrorKind::truncated: return "truncated";
    case EmbIoErrorKind::trailing_bytes: return "trailing_bytes";
    case EmbIoErrorKind::count_mismatch: return "count_mismatch";
    case EmbIoErrorKind::dim_mismatch: return "dim_mismatch";
    case EmbIoErrorKind::duplicate_ids: return "duplicate_ids";
    case EmbIoErrorKind::bad_manifest: return "bad_manifest";
    case EmbIoErrorKind::invalid_values: return "invalid_values";
  }
  return "unknown";
}

std::filesystem::path manifest_path_for(const std::filesystem::path& emb_path) {
  auto p = emb_path;
  p.replace_extension(".manifest.json");
  return p;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbIoError(EmbIoErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw EmbIoError(EmbIoErrorKind::io, "read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EmbIoError(EmbIoErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw EmbIoError(EmbIoErrorKind::io, "write failed for " + path.string());
}

std::vector<std::uint8_t> encode_emb1(const EmbeddingMatrix& matrix) {
  if (matrix.size() > std::numeric_limits<std::uint32_t>::max() ||
      matrix.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw EmbIoError(EmbIoErrorKind::invalid_values, "matrix too large for EMB1");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + matrix.size() * matrix.dim() * 4);
  for (std::uint8_t b : kMagic) out.push_back(b);
  put_u32(out, static_cast<std::uint32_t>(matrix.size()));
  put_u32(out, static_cast<std::uint32_t>(matrix.dim()));
  for (double v : matrix.values().data()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) {
      throw EmbIoError(EmbIoErrorKind::invalid_values,
                       "value " + std::to_string(v) + " is not finite as float32");
    }
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Emb1Payload decode_emb1(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw EmbIoError(EmbIoErrorKind::bad_magic, "missing EMB1 magic");
  }
  if (bytes.size() < kHeaderBytes) {
    throw EmbIoError(EmbIoErrorKind::truncated, "header shorter than 12 bytes");
  }
  Emb1Payload payload;
  payload.rows = get_u32(bytes, 4);
  payload.dim = get_u32(bytes, 8);
  if (payload.dim == 0) throw EmbIoError(EmbIoErrorKind::dim_mismatch, "dim is zero");
  const std::uint64_t expected =
      kHeaderBytes + std::uint64_t{payload.rows} * payload.dim * 4;
  if (bytes.size() < expected) {
    throw EmbIoError(EmbIoErrorKind::truncated,
                     "payload holds " + std::to_string((bytes.size() - kHeaderBytes) / 4) +
                         " floats, header promises " +
                         std::to_string(std::uint64_t{payload.rows} * payload.dim));
  }
  if (bytes.size() > expected) {
    throw EmbIoError(EmbIoErrorKind::trailing_bytes,
                     std::to_string(bytes.size() - expected) + " bytes after payload");
  }
  payload.values.resize(std::size_t{payload.rows} * payload.dim);
  for (std::size_t i = 0; i < payload.values.size(); ++i) {
    payload.values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return payload;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_emb1(matrix);
  json manifest;
  manifest["ids"] = matrix.ids();
  manifest["modality"] = to_string(matrix.modality());
  manifest["normalized"] = matrix.is_normalized();
  write_file_bytes(path, bytes);
  write_text(manifest_path_for(path), manifest.dump(2) + "\n");
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  const auto payload = decode_emb1(read_file_bytes(path));

  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path_for(path)));
  } catch (const json::exception& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, e.what());
  }
  if (!manifest.is_object() || !manifest.contains("ids") || !manifest["ids"].is_array()) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, "manifest lacks an 'ids' array");
  }
  std::vector<std::string> ids;
  try {
    ids = manifest["ids"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, e.what());
  }
  if (ids.size() != payload.rows) {
    throw EmbIoError(EmbIoErrorKind::count_mismatch,
                     "manifest lists " + std::to_string(ids.size()) + " ids, payload has " +
                         std::to_string(payload.rows) + " rows");
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw EmbIoError(EmbIoErrorKind::duplicate_ids, "id '" + id + "' appears twice");
    }
  }
  Modality modality = Modality::photo;
  bool normalized = false;
  try {
    modality = modality_from_string(manifest.value("modality", std::string("photo")));
    normalized = manifest.value("normalized", false);
  } catch (const std::exception& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, e.what());
  }
  try {
    return EmbeddingMatrix(std::move(ids), payload.dim, payload.values, modality, normalized);
  } catch (const ContractViolation& e) {
    throw EmbIoError(EmbIoErrorKind::invalid_values, e.what());
  }
}

void save_pairing(const Pairing& pairing, const std::filesystem::path& path) {
  json j = json::object();
  for (const auto& [photo, sketch] : pairing.entries()) j[photo] = sketch;
  write_text(path, j.dump(2) + "\n");
}

Pairing load_pairing(const std::filesystem::path& path) {
  try {
    const json j = json::parse(read_text(path));
    if (!j.is_object()) {
      throw EmbIoError(EmbIoErrorKind::bad_manifest, "pairs file must be a JSON object");
    }
    return Pairing(j.get<std::map<std::string, std::string>>());
  } catch (const json::exception& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, path.string() + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, path.string() + ": " + e.what());
  }
}

}  // namespace visampler
