#include "visampler/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "visampler/emb_io.hpp"

namespace visampler {

namespace {

struct Normalized {
  Vector z;  // affine image
  Vector y;  // normalized output
  double scale = 0.0;  // sqrt(|z|^2 + eps)
};

Normalized forward(const AffineMap& map, std::span<const double> raw) {
  Normalized out;
  out.z = map.apply(raw);
  double sq = 0.0;
  for (double v : out.z) sq += v * v;
  out.scale = std::sqrt(sq + kNormEpsilon);
  out.y.resize(out.z.size());
  for (std::size_t i = 0; i < out.z.size(); ++i) out.y[i] = out.z[i] / out.scale;
  return out;
}

// Pulls dL/dy back through y = z / s and then through z = W x + b,
// accumulating into the weight block at `w_offset` and bias block after it.
void backprop(const Normalized& f, std::span<const double> grad_y, std::span<const double> raw,
              std::span<double> grad, std::size_t w_offset, double weight) {
  const std::size_t d = f.z.size();
  const std::size_t m = raw.size();
  double z_dot_g = 0.0;
  for (std::size_t i = 0; i < d; ++i) z_dot_g += f.z[i] * grad_y[i];
  const double s3 = f.scale * f.scale * f.scale;
  const std::size_t b_offset = w_offset + d * m;
  for (std::size_t i = 0; i < d; ++i) {
    const double gz = weight * (grad_y[i] / f.scale - f.z[i] * z_dot_g / s3);
    if (gz == 0.0) continue;
    double* row = grad.data() + w_offset + i * m;
    for (std::size_t j = 0; j < m; ++j) row[j] += gz * raw[j];
    grad[b_offset + i] += gz;
  }
}

void require_raw_dim(std::span<const double> raw, std::size_t expected) {
  if (raw.size() != expected) {
    throw ContractViolation("raw feature dim " + std::to_string(raw.size()) +
                            " != embedder raw dim " + std::to_string(expected));
  }
}

}  // namespace

Vector AffineMap::apply(std::span<const double> raw) const {
  Vector out(bias);
  for (std::size_t i = 0; i < weight.rows(); ++i) {
    const auto w = weight.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * raw[j];
    out[i] += acc;
  }
  return out;
}

CrossModalEmbedder::CrossModalEmbedder(AffineMap photo, AffineMap sketch, double margin)
    : photo_(std::move(photo)), sketch_(std::move(sketch)), margin_(margin) {
  if (!(margin_ > 0.0)) throw ContractViolation("triplet margin must be positive");
  if (photo_.weight.rows() == 0 || photo_.weight.cols() == 0) {
    throw ContractViolation("embedder maps must be non-empty");
  }
  if (photo_.weight.rows() != sketch_.weight.rows() ||
      photo_.weight.cols() != sketch_.weight.cols() ||
      photo_.bias.size() != photo_.weight.rows() || sketch_.bias.size() != sketch_.weight.rows()) {
    throw ContractViolation("photo and sketch maps have inconsistent shapes");
  }
}

CrossModalEmbedder CrossModalEmbedder::identity(std::size_t dim, double margin) {
  Matrix w(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) w(i, i) = 1.0;
  AffineMap map{w, Vector(dim, 0.0)};
  return CrossModalEmbedder(map, map, margin);
}

CrossModalEmbedder CrossModalEmbedder::random(std::size_t raw_dim, std::size_t embed_dim,
                                              double margin, Seed seed) {
  Rng rng(seed);
  Matrix w(embed_dim, raw_dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(raw_dim));
  for (double& v : w.data()) v = sd * rng.normal();
  AffineMap map{w, Vector(embed_dim, 0.0)};
  return CrossModalEmbedder(map, map, margin);
}

Vector CrossModalEmbedder::embed(std::span<const double> raw, Modality modality) const {
  require_raw_dim(raw, raw_dim());
  auto f = forward(map(modality), raw);
  if (std::all_of(f.z.begin(), f.z.end(), [](double v) { return v == 0.0; })) {
    throw ContractViolation("affine image is the zero vector; cannot normalize");
  }
  return std::move(f.y);
}

EmbeddingMatrix CrossModalEmbedder::embed_all(const EmbeddingMatrix& raw) const {
  std::vector<double> data;
  data.reserve(raw.size() * embed_dim());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto y = embed(raw.row(i), raw.modality());
    data.insert(data.end(), y.begin(), y.end());
  }
  return EmbeddingMatrix(raw.ids(), embed_dim(), std::move(data), raw.modality(), true);
}

std::size_t CrossModalEmbedder::parameter_count() const {
  return 2 * (embed_dim() * raw_dim() + embed_dim());
}

std::vector<double> CrossModalEmbedder::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const AffineMap* m : {&photo_, &sketch_}) {
    p.insert(p.end(), m->weight.data().begin(), m->weight.data().end());
    p.insert(p.end(), m->bias.begin(), m->bias.end());
  }
  return p;
}

void CrossModalEmbedder::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw ContractViolation("expected " + std::to_string(parameter_count()) + " parameters, got " +
                            std::to_string(params.size()));
  }
  auto it = params.begin();
  for (AffineMap* m : {&photo_, &sketch_}) {
    std::copy_n(it, m->weight.data().size(), m->weight.data().begin());
    it += static_cast<std::ptrdiff_t>(m->weight.data().size());
    std::copy_n(it, m->bias.size(), m->bias.begin());
    it += static_cast<std::ptrdiff_t>(m->bias.size());
  }
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  const double pos = euclidean_distance(anchor, positive);
  const double neg = euclidean_distance(anchor, negative);
  return std::max(0.0, pos - neg + margin);
}

double triplet_objective(const CrossModalEmbedder& model, const Triplet& t,
                         std::span<double> grad, double weight) {
  require_raw_dim(t.anchor_sketch, model.raw_dim());
  require_raw_dim(t.positive_photo, model.raw_dim());
  require_raw_dim(t.negative_photo, model.raw_dim());
  if (grad.size() != model.parameter_count()) {
    throw ContractViolation("gradient buffer has wrong size");
  }
  const auto a = forward(model.map(Modality::sketch), t.anchor_sketch);
  const auto p = forward(model.map(Modality::photo), t.positive_photo);
  const auto n = forward(model.map(Modality::photo), t.negative_photo);
  const double pos = euclidean_distance(a.y, p.y);
  const double neg = euclidean_distance(a.y, n.y);
  const double loss = pos - neg + model.margin();
  if (loss <= 0.0) return 0.0;

  const std::size_t d = model.embed_dim();
  Vector g_a(d, 0.0), g_p(d, 0.0), g_n(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    // Zero distances contribute a zero subgradient.
    const double dp = pos > 0.0 ? (a.y[i] - p.y[i]) / pos : 0.0;
    const double dn = neg > 0.0 ? (a.y[i] - n.y[i]) / neg : 0.0;
    g_a[i] = dp - dn;
    g_p[i] = -dp;
    g_n[i] = dn;
  }
  const std::size_t block = d * model.raw_dim() + d;
  backprop(p, g_p, t.positive_photo, grad, 0, weight);
  backprop(n, g_n, t.negative_photo, grad, 0, weight);
  backprop(a, g_a, t.anchor_sketch, grad, block, weight);
  return loss;
}

TrainResult train(const EmbeddingMatrix& raw_photos, const EmbeddingMatrix& raw_sketches,
                  const TrainConfig& config) {
  if (raw_photos.dim() != raw_sketches.dim()) {
    throw ContractViolation("raw photo and sketch features differ in dim");
  }
  CrossModalEmbedder init =
      config.init == InitScheme::identity
          ? (raw_photos.dim() == config.embed_dim
                 ? CrossModalEmbedder::identity(config.embed_dim, config.margin)
                 : throw ContractViolation("identity init needs raw_dim == embed_dim"))
          : CrossModalEmbedder::random(raw_photos.dim(), config.embed_dim, config.margin,
                                       derive(config.seed, "embedder_init"));
  return train_from(std::move(init), raw_photos, raw_sketches, config);
}

TrainResult train_from(CrossModalEmbedder model, const EmbeddingMatrix& raw_photos,
                       const EmbeddingMatrix& raw_sketches, const TrainConfig& config) {
  const std::size_t n = raw_photos.size();
  if (n < 2) throw ContractViolation("training needs at least 2 labeled pairs");
  if (raw_sketches.size() != n) {
    throw ContractViolation("raw photos and sketches are not index-aligned");
  }
  if (raw_photos.dim() != model.raw_dim() || raw_sketches.dim() != model.raw_dim()) {
    throw ContractViolation("raw features do not match the model's raw dim");
  }
  if (config.batch_size == 0) throw ContractViolation("batch size must be positive");
  if (config.epochs < 0) throw ContractViolation("epochs must be non-negative");

  const std::size_t count = model.parameter_count();
  auto& adam = model.optimizer_state();
  adam.first_moment.resize(count, 0.0);
  adam.second_moment.resize(count, 0.0);

  Rng rng(derive(config.seed, "embedder_train"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(count);
  std::vector<double> params = model.parameters();

  TrainResult result{model, {}, 0.0};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::size_t batch = end - start;
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t anchor = order[k];
        std::size_t negative;
        if (batch >= 2) {
          std::size_t offset = rng.uniform_index(batch - 1);
          if (start + offset >= k) ++offset;
          negative = order[start + offset];
        } else {
          negative = rng.uniform_index(n - 1);
          if (negative >= anchor) ++negative;
        }
        Triplet t{raw_sketches.row(anchor), raw_photos.row(anchor), raw_photos.row(negative)};
        epoch_loss += triplet_objective(model, t, grad, 1.0 / static_cast<double>(batch));
      }

      ++adam.step;
      const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
      const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
      for (std::size_t i = 0; i < count; ++i) {
        auto& m = adam.first_moment[i];
        auto& v = adam.second_moment[i];
        m = config.beta1 * m + (1.0 - config.beta1) * grad[i];
        v = config.beta2 * v + (1.0 - config.beta2) * grad[i] * grad[i];
        params[i] -= config.learning_rate * (m / bias1) / (std::sqrt(v / bias2) + config.adam_epsilon);
      }
      model.set_parameters(params);
    }
    for (double p : params) {
      if (!std::isfinite(p)) throw std::runtime_error("training diverged: non-finite parameter");
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  result.final_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
  result.model = std::move(model);
  return result;
}

namespace {

constexpr char kCheckpointMagic[4] = {'V', 'I', 'C', '1'};

EmbeddingMatrix block_matrix(const std::string& name, std::size_t rows, std::size_t cols,
                             std::vector<double> values) {
  std::vector<std::string> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = name + "/" + std::to_string(i);
  return EmbeddingMatrix(std::move(ids), cols, std::move(values), Modality::photo);
}

}  // namespace

void save_checkpoint(const CrossModalEmbedder& model, const std::filesystem::path& path) {
  using nlohmann::json;
  const std::size_t d = model.embed_dim();
  const std::size_t m = model.raw_dim();
  struct Block {
    std::string name;
    std::size_t rows, cols;
    std::vector<double> values;
  };
  const std::vector<Block> blocks = {
      {"photo_weight", d, m, model.map(Modality::photo).weight.data()},
      {"photo_bias", 1, d, model.map(Modality::photo).bias},
      {"sketch_weight", d, m, model.map(Modality::sketch).weight.data()},
      {"sketch_bias", 1, d, model.map(Modality::sketch).bias},
      {"margin", 1, 1, {model.margin()}},
  };
  json header;
  header["format"] = "visampler-checkpoint";
  header["version"] = 1;
  header["raw_dim"] = m;
  header["embed_dim"] = d;
  header["margin"] = model.margin();
  header["blocks"] = json::array();
  for (const auto& b : blocks) {
    header["blocks"].push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& b : blocks) {
    const auto bytes = encode_emb1(block_matrix(b.name, b.rows, b.cols, b.values));
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  write_file_bytes(path, out);
}

CrossModalEmbedder load_checkpoint(const std::filesystem::path& path) {
  using nlohmann::json;
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 8 || !std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic),
                                      bytes.begin())) {
    throw EmbIoError(EmbIoErrorKind::bad_magic, path.string() + " is not a checkpoint");
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[4 + i]) << (8 * i);
  if (bytes.size() < 8 + std::size_t{len}) {
    throw EmbIoError(EmbIoErrorKind::truncated, "checkpoint header cut short");
  }
  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
  } catch (const json::exception& e) {
    throw EmbIoError(EmbIoErrorKind::bad_manifest, e.what());
  }
  std::size_t offset = 8 + len;
  std::map<std::string, Emb1Payload> blocks;
  for (const auto& b : header.at("blocks")) {
    const auto rows = b.at("rows").get<std::size_t>();
    const auto cols = b.at("cols").get<std::size_t>();
    const std::size_t size = 12 + rows * cols * 4;
    if (offset + size > bytes.size()) {
      throw EmbIoError(EmbIoErrorKind::truncated, "checkpoint block cut short");
    }
    auto payload = decode_emb1(std::span(bytes).subspan(offset, size));
    if (payload.rows != rows || payload.dim != cols) {
      throw EmbIoError(EmbIoErrorKind::dim_mismatch, "block shape disagrees with header");
    }
    blocks.emplace(b.at("name").get<std::string>(), std::move(payload));
    offset += size;
  }
  if (offset != bytes.size()) {
    throw EmbIoError(EmbIoErrorKind::trailing_bytes, "bytes after last checkpoint block");
  }
  const auto d = header.at("embed_dim").get<std::size_t>();
  const auto m = header.at("raw_dim").get<std::size_t>();
  auto take = [&](const std::string& name) -> std::vector<double> {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw EmbIoError(EmbIoErrorKind::bad_manifest, "missing block " + name);
    return it->second.values;
  };
  AffineMap photo{Matrix(d, m, take("photo_weight")), take("photo_bias")};
  AffineMap sketch{Matrix(d, m, take("sketch_weight")), take("sketch_bias")};
  // The header keeps the margin as an exact double; the block is float32.
  take("margin");
  return CrossModalEmbedder(std::move(photo), std::move(sketch),
                            header.at("margin").get<double>());
}

}  // namespace visampler
