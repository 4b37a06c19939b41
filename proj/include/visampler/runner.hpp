#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "visampler/core.hpp"
#include "visampler/embedder.hpp"
#include "visampler/samplers.hpp"
#include "visampler/synth.hpp"

namespace visampler {

/// One acquisition strategy under comparison, with its alpha.
struct Arm {
  Strategy strategy = Strategy::random;
  double alpha = 0.0;

  std::string label() const;
  friend bool operator==(const Arm&, const Arm&) = default;
};

struct DataFiles {
  std::filesystem::path photos;    // EMB1 raw photo features
  std::filesystem::path sketches;  // EMB1 raw sketch features
  std::filesystem::path pairs;     // pairs.json
};

struct ExperimentConfig {
  std::size_t rounds = 5;
  /// Photos acquired per round; unset means ceil(8% of training photos).
  std::optional<std::size_t> budget;
  /// Initial labeled pairs; unset means ceil(8% of training photos).
  std::optional<std::size_t> initial_labeled;
  double test_fraction = 0.2;
  std::vector<Arm> arms = {Arm{Strategy::vi_diverse, 0.0}};
  std::vector<std::uint64_t> seeds = {1, 2};
  TrainConfig train;  // train.seed is ignored; per-round seeds are derived
  int lloyd_max_iter = 100;
  double lloyd_tol = 1e-6;

  /// Synthetic data is used unless `data` is set.
  SynthConfig synth;
  /// Draw a fresh synthetic dataset per experiment seed.
  bool vary_dataset_with_seed = true;
  std::optional<DataFiles> data;
  /// Normalize externally loaded raw features before training.
  bool normalize_inputs = true;

  std::filesystem::path output_dir = "results";
  /// 0 = hardware concurrency.
  unsigned threads = 0;
};

/// Raw photo/sketch features with their pairing.
struct Dataset {
  EmbeddingMatrix photos;
  EmbeddingMatrix sketches;
  Pairing pairing;
};

struct ALRoundRecord {
  std::size_t round = 0;
  Arm arm;
  std::size_t labeled_size = 0;
  double acc1 = 0.0;
  double acc10 = 0.0;
  std::vector<std::string> selected;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

struct ArmRun {
  Arm arm;
  std::vector<ALRoundRecord> records;
  std::vector<std::string> final_labeled;    // photo IDs
  std::vector<std::string> final_unlabeled;  // photo IDs
  std::set<std::string> revealed_sketches;   // everything the oracle handed out
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<std::string> train_photos;
  std::vector<std::string> test_photos;
  std::vector<std::string> initial_labeled;
  std::vector<ArmRun> arms;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;  // in config.seeds order
};

/// Ground-truth sketch provider. Reveals a photo's sketch only when asked
/// and remembers everything it revealed.
class Oracle {
 public:
  explicit Oracle(const Pairing& pairing) : pairing_(&pairing) {}

  const std::string& reveal(const std::string& photo_id);
  const std::set<std::string>& revealed() const { return revealed_; }

 private:
  const Pairing* pairing_;
  std::set<std::string> revealed_;
};

struct ResolvedSizes {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t initial_labeled = 0;
  std::size_t budget = 0;
};

/// Resolves default sizes and checks initial + rounds * budget <= n_train.
ResolvedSizes resolve_sizes(const ExperimentConfig& config, std::size_t n_photos);

void validate(const ExperimentConfig& config);

/// Synthetic dataset for one seed, or the configured files.
Dataset load_dataset(const ExperimentConfig& config, std::uint64_t seed);

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed);
ExperimentResult run_experiment(const ExperimentConfig& config);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

}  // namespace visampler
