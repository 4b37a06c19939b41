#include "visampler/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "visampler/emb_io.hpp"
#include "visampler/retrieval.hpp"

namespace visampler {

namespace {

using nlohmann::json;

std::string format_alpha(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

bool uses_alpha(Strategy s) { return s == Strategy::vi_ensemble || s == Strategy::vi_diverse; }

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

// Mutable view of one arm's pools during a run.
struct PoolState {
  std::vector<std::string> labeled;    // photo IDs, acquisition order
  std::vector<std::string> unlabeled;  // photo IDs, original order
};

struct RoundModel {
  CrossModalEmbedder model;
  double acc1 = 0.0;
  double acc10 = 0.0;
};

class SeedContext {
 public:
  SeedContext(const ExperimentConfig& config, std::uint64_t seed)
      : config_(config), seed_(seed), data_(load_dataset(config, seed)) {
    sizes_ = resolve_sizes(config, data_.photos.size());
    Rng split_rng(derive(Seed{seed}, "split"));
    const auto perm = shuffled_indices(data_.photos.size(), split_rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      (i < sizes_.n_test ? test_ids_ : train_ids_).push_back(data_.photos.id(perm[i]));
    }
    const auto init = shuffled_indices(train_ids_.size(), split_rng);
    for (std::size_t i = 0; i < init.size(); ++i) {
      (i < sizes_.initial_labeled ? initial_labeled_ : initial_unlabeled_)
          .push_back(train_ids_[init[i]]);
    }
    const auto test_photos = data_.photos.subset_by_id(test_ids_);
    std::vector<std::string> test_sketch_ids;
    for (const auto& id : test_ids_) test_sketch_ids.push_back(data_.pairing.sketch_of(id));
    test_photos_raw_ = test_photos;
    test_sketches_raw_ = data_.sketches.subset_by_id(test_sketch_ids);
  }

  const ResolvedSizes& sizes() const { return sizes_; }
  const std::vector<std::string>& train_ids() const { return train_ids_; }
  const std::vector<std::string>& test_ids() const { return test_ids_; }
  const std::vector<std::string>& initial_labeled() const { return initial_labeled_; }
  const std::vector<std::string>& initial_unlabeled() const { return initial_unlabeled_; }
  const Dataset& data() const { return data_; }

  // Trains from scratch on the labeled pairs (sketches via the oracle) and
  // evaluates on the held-out split.
  RoundModel train_and_evaluate(const std::vector<std::string>& labeled, Oracle& oracle,
                                std::size_t round) const {
    std::vector<std::string> sketch_ids;
    sketch_ids.reserve(labeled.size());
    for (const auto& id : labeled) sketch_ids.push_back(oracle.reveal(id));
    TrainConfig tc = config_.train;
    tc.seed = derive(Seed{seed_}, "train", round);
    auto trained = train(data_.photos.subset_by_id(labeled),
                         data_.sketches.subset_by_id(sketch_ids), tc);

    const auto gallery = trained.model.embed_all(test_photos_raw_);
    const auto queries = trained.model.embed_all(test_sketches_raw_);
    // acc@10 is capped at the gallery size for tiny test splits.
    const std::size_t q10 = std::min<std::size_t>(10, gallery.size());
    const std::size_t qs[] = {1, q10};
    const auto eval = evaluate_retrieval(queries, gallery, data_.pairing, qs);
    RoundModel out{std::move(trained.model), eval.acc_at.at(1), eval.acc_at.at(q10)};
    return out;
  }

  QuerySet acquire(const Arm& arm, const CrossModalEmbedder& model, const PoolState& pools,
                   Oracle& oracle, std::size_t round) const {
    const auto labeled_photos = model.embed_all(data_.photos.subset_by_id(pools.labeled));
    std::vector<std::string> sketch_ids;
    for (const auto& id : pools.labeled) sketch_ids.push_back(oracle.reveal(id));
    const auto labeled_sketches = model.embed_all(data_.sketches.subset_by_id(sketch_ids));
    const LabeledPool labeled(labeled_photos, labeled_sketches);
    const UnlabeledPool unlabeled{model.embed_all(data_.photos.subset_by_id(pools.unlabeled))};
    SamplingRequest req{labeled, unlabeled};
    req.budget = sizes_.budget;
    req.alpha = arm.alpha;
    req.seed = derive(Seed{seed_}, "sample", round);
    req.strategy = arm.strategy;
    req.lloyd_max_iter = config_.lloyd_max_iter;
    req.lloyd_tol = config_.lloyd_tol;
    return select(req);
  }

 private:
  const ExperimentConfig& config_;
  std::uint64_t seed_;
  Dataset data_;
  ResolvedSizes sizes_;
  std::vector<std::string> train_ids_, test_ids_, initial_labeled_, initial_unlabeled_;
  EmbeddingMatrix test_photos_raw_, test_sketches_raw_;
};

void check_conservation(const PoolState& pools, std::size_t n_train) {
  std::set<std::string> all(pools.labeled.begin(), pools.labeled.end());
  for (const auto& id : pools.unlabeled) {
    if (!all.insert(id).second) {
      throw std::logic_error("photo '" + id + "' is both labeled and unlabeled");
    }
  }
  if (all.size() != n_train) throw std::logic_error("labeled/unlabeled pools lost photos");
}

}  // namespace

std::string Arm::label() const {
  std::string out(to_string(strategy));
  if (uses_alpha(strategy)) out += " a=" + format_alpha(alpha);
  return out;
}

const std::string& Oracle::reveal(const std::string& photo_id) {
  const auto& sketch = pairing_->sketch_of(photo_id);
  revealed_.insert(sketch);
  return sketch;
}

ResolvedSizes resolve_sizes(const ExperimentConfig& config, std::size_t n_photos) {
  ResolvedSizes s;
  s.n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n_photos)));
  if (s.n_test == 0 || s.n_test >= n_photos) {
    throw ContractViolation("test split of " + std::to_string(s.n_test) + " photos out of " +
                            std::to_string(n_photos) + " leaves no train or test data");
  }
  s.n_train = n_photos - s.n_test;
  const auto eight_percent =
      static_cast<std::size_t>(std::ceil(0.08 * static_cast<double>(s.n_train)));
  s.initial_labeled = config.initial_labeled.value_or(eight_percent);
  s.budget = config.budget.value_or(eight_percent);
  if (s.initial_labeled < 2) throw ContractViolation("need at least 2 initial labeled pairs");
  if (s.budget == 0) throw ContractViolation("budget per round must be positive");
  if (s.initial_labeled + config.rounds * s.budget > s.n_train) {
    throw ContractViolation("budget exhausted: initial " + std::to_string(s.initial_labeled) +
                            " + " + std::to_string(config.rounds) + " rounds x " +
                            std::to_string(s.budget) + " exceeds " + std::to_string(s.n_train) +
                            " training photos");
  }
  return s;
}

void validate(const ExperimentConfig& config) {
  if (config.rounds == 0) throw ContractViolation("rounds must be positive");
  if (config.arms.empty()) throw ContractViolation("no strategies configured");
  if (config.seeds.empty()) throw ContractViolation("no seeds configured");
  if (std::set(config.seeds.begin(), config.seeds.end()).size() != config.seeds.size()) {
    throw ContractViolation("seeds must be distinct");
  }
  for (const auto& arm : config.arms) {
    if (!(arm.alpha >= 0.0 && arm.alpha <= 1.0)) {
      throw ContractViolation("alpha of " + arm.label() + " outside [0, 1]");
    }
  }
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw ContractViolation("test_fraction must lie in (0, 1)");
  }
}

Dataset load_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.data) {
    auto photos = load_embeddings(config.data->photos);
    auto sketches = load_embeddings(config.data->sketches);
    auto pairing = load_pairing(config.data->pairs);
    if (config.normalize_inputs) {
      photos = photos.normalized();
      sketches = sketches.normalized();
    }
    std::vector<std::string> sketch_order;
    for (const auto& id : photos.ids()) sketch_order.push_back(pairing.sketch_of(id));
    sketches = sketches.subset_by_id(sketch_order);
    return Dataset{std::move(photos), std::move(sketches), std::move(pairing)};
  }
  SynthConfig synth = config.synth;
  if (config.vary_dataset_with_seed) synth.seed = derive(config.synth.seed, "dataset", seed);
  auto generated = generate(synth);
  return Dataset{std::move(generated.photos), std::move(generated.sketches),
                 std::move(generated.pairing)};
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  validate(config);
  const SeedContext ctx(config, seed);
  SeedRun run;
  run.seed = seed;
  run.train_photos = ctx.train_ids();
  run.test_photos = ctx.test_ids();
  run.initial_labeled = ctx.initial_labeled();

  // Round 0 trains on the shared initial split, so every arm starts from
  // the same model.
  const auto t0 = std::chrono::steady_clock::now();
  Oracle initial_oracle(ctx.data().pairing);
  const RoundModel initial = ctx.train_and_evaluate(ctx.initial_labeled(), initial_oracle, 0);
  const double initial_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& arm : config.arms) {
    ArmRun arm_run;
    arm_run.arm = arm;
    Oracle oracle(ctx.data().pairing);
    PoolState pools{ctx.initial_labeled(), ctx.initial_unlabeled()};
    for (const auto& id : pools.labeled) oracle.reveal(id);

    for (std::size_t round = 0; round < config.rounds; ++round) {
      const auto start = std::chrono::steady_clock::now();
      RoundModel current =
          round == 0 ? initial : ctx.train_and_evaluate(pools.labeled, oracle, round);

      ALRoundRecord rec;
      rec.round = round;
      rec.arm = arm;
      rec.labeled_size = pools.labeled.size();
      rec.acc1 = current.acc1;
      rec.acc10 = current.acc10;
      rec.seed = seed;

      const auto query = ctx.acquire(arm, current.model, pools, oracle, round);
      const std::set<std::string> picked(query.ids.begin(), query.ids.end());
      std::erase_if(pools.unlabeled, [&](const std::string& id) { return picked.contains(id); });
      for (const auto& id : query.ids) {
        oracle.reveal(id);
        pools.labeled.push_back(id);
      }
      check_conservation(pools, ctx.sizes().n_train);
      rec.selected = query.ids;
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count() +
                    (round == 0 ? initial_ms : 0.0);
      arm_run.records.push_back(std::move(rec));
    }
    arm_run.final_labeled = pools.labeled;
    arm_run.final_unlabeled = pools.unlabeled;
    arm_run.revealed_sketches = oracle.revealed();
    run.arms.push_back(std::move(arm_run));
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentResult result;
  result.runs.resize(config.seeds.size());
  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.seeds.size())));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.seeds.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        result.runs[i] = run_seed(config, config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("seed " + std::to_string(config.seeds[i]) + ": " + e.what());
    }
  }
  return result;
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("experiment config: ") + e.what());
  }
  try {
    c.rounds = j.value("rounds", c.rounds);
    if (j.contains("budget") && !j["budget"].is_null()) c.budget = j["budget"].get<std::size_t>();
    if (j.contains("initial_labeled") && !j["initial_labeled"].is_null()) {
      c.initial_labeled = j["initial_labeled"].get<std::size_t>();
    }
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    if (j.contains("arms")) {
      c.arms.clear();
      for (const auto& a : j["arms"]) {
        c.arms.push_back(Arm{strategy_from_string(a.at("strategy").get<std::string>()),
                             a.value("alpha", 0.0)});
      }
    } else if (j.contains("strategy")) {
      c.arms = {Arm{strategy_from_string(j["strategy"].get<std::string>()), j.value("alpha", 0.0)}};
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.lloyd_max_iter = j.value("lloyd_max_iter", c.lloyd_max_iter);
    c.lloyd_tol = j.value("lloyd_tol", c.lloyd_tol);
    if (j.contains("embedder")) {
      const auto& e = j["embedder"];
      c.train.embed_dim = e.value("embed_dim", c.train.embed_dim);
      c.train.epochs = e.value("epochs", c.train.epochs);
      c.train.batch_size = e.value("batch_size", c.train.batch_size);
      c.train.learning_rate = e.value("learning_rate", c.train.learning_rate);
      c.train.margin = e.value("margin", c.train.margin);
    }
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      c.synth.n_prototypes = s.value("n_prototypes", c.synth.n_prototypes);
      c.synth.photos_per_prototype = s.value("photos_per_prototype", c.synth.photos_per_prototype);
      c.synth.raw_dim = s.value("raw_dim", c.synth.raw_dim);
      c.synth.photo_noise = s.value("photo_noise", c.synth.photo_noise);
      c.synth.sketch_noise = s.value("sketch_noise", c.synth.sketch_noise);
      c.synth.modality_offset = s.value("modality_offset", c.synth.modality_offset);
      c.synth.seed = Seed{s.value("seed", c.synth.seed.value)};
    }
    c.vary_dataset_with_seed = j.value("vary_dataset_with_seed", c.vary_dataset_with_seed);
    if (j.contains("data") && !j["data"].is_null()) {
      const auto& d = j["data"];
      c.data = DataFiles{d.at("photos").get<std::string>(), d.at("sketches").get<std::string>(),
                         d.at("pairs").get<std::string>()};
    }
    c.normalize_inputs = j.value("normalize_inputs", c.normalize_inputs);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return config_from_json(std::string(bytes.begin(), bytes.end()));
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["rounds"] = c.rounds;
  j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  j["initial_labeled"] = c.initial_labeled ? json(*c.initial_labeled) : json(nullptr);
  j["test_fraction"] = c.test_fraction;
  j["arms"] = json::array();
  for (const auto& a : c.arms) {
    j["arms"].push_back({{"strategy", std::string(to_string(a.strategy))}, {"alpha", a.alpha}});
  }
  j["seeds"] = c.seeds;
  j["lloyd_max_iter"] = c.lloyd_max_iter;
  j["lloyd_tol"] = c.lloyd_tol;
  j["embedder"] = {{"embed_dim", c.train.embed_dim},   {"epochs", c.train.epochs},
                   {"batch_size", c.train.batch_size}, {"learning_rate", c.train.learning_rate},
                   {"margin", c.train.margin}};
  j["synth"] = {{"n_prototypes", c.synth.n_prototypes},
                {"photos_per_prototype", c.synth.photos_per_prototype},
                {"raw_dim", c.synth.raw_dim},
                {"photo_noise", c.synth.photo_noise},
                {"sketch_noise", c.synth.sketch_noise},
                {"modality_offset", c.synth.modality_offset},
                {"seed", c.synth.seed.value}};
  j["vary_dataset_with_seed"] = c.vary_dataset_with_seed;
  if (c.data) {
    j["data"] = {{"photos", c.data->photos.string()},
                 {"sketches", c.data->sketches.string()},
                 {"pairs", c.data->pairs.string()}};
  }
  j["normalize_inputs"] = c.normalize_inputs;
  j["output_dir"] = c.output_dir.string();
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

}  // namespace visampler
