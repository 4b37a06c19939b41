// vi-sampler: command-line front end for violation-index active learning.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "visampler/emb_io.hpp"
#include "visampler/embedder.hpp"
#include "visampler/report.hpp"
#include "visampler/retrieval.hpp"
#include "visampler/runner.hpp"
#include "visampler/samplers.hpp"
#include "visampler/synth.hpp"
#include "visampler/violation.hpp"

namespace fs = std::filesystem;
using namespace visampler;

namespace {

constexpr const char* kOutputDirEnv = "VI_SAMPLER_OUTPUT_DIR";

EmbeddingMatrix load_maybe_normalized(const fs::path& path, bool normalize) {
  auto m = load_embeddings(path);
  return normalize && !m.is_normalized() ? m.normalized() : m;
}

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

struct PoolArgs {
  std::string labeled_photos, labeled_sketches, pairs, unlabeled;
  bool no_normalize = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--labeled-photos", labeled_photos, "EMB1 embeddings of labeled photos")
        ->required();
    cmd->add_option("--labeled-sketches", labeled_sketches,
                    "EMB1 embeddings of (at least) their paired sketches")
        ->required();
    cmd->add_option("--pairs", pairs, "pairs.json mapping photo ID to sketch ID")->required();
    cmd->add_option("--unlabeled", unlabeled, "EMB1 embeddings of unlabeled photos")->required();
    cmd->add_flag("--no-normalize", no_normalize, "use embeddings as stored, without L2 normalization");
  }

  std::pair<LabeledPool, UnlabeledPool> load() const {
    const bool norm = !no_normalize;
    auto photos = load_maybe_normalized(labeled_photos, norm);
    auto sketches = load_maybe_normalized(labeled_sketches, norm);
    auto pool = pair_up(photos, sketches, load_pairing(pairs));
    return {std::move(pool), UnlabeledPool{load_maybe_normalized(unlabeled, norm)}};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Violation-index active learning for cross-modal retrieval"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic photo/sketch dataset");
  SynthConfig synth;
  std::string gen_dir = ".";
  gen->add_option("--out-dir", gen_dir, "output directory")->capture_default_str();
  gen->add_option("--prototypes", synth.n_prototypes)->capture_default_str();
  gen->add_option("--photos-per-prototype", synth.photos_per_prototype)->capture_default_str();
  gen->add_option("--raw-dim", synth.raw_dim)->capture_default_str();
  gen->add_option("--photo-noise", synth.photo_noise)->capture_default_str();
  gen->add_option("--sketch-noise", synth.sketch_noise)->capture_default_str();
  gen->add_option("--modality-offset", synth.modality_offset)->capture_default_str();
  gen->add_option("--seed", synth.seed.value)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "fit the cross-modal embedder on raw pairs");
  std::string train_photos, train_sketches, train_pairs, train_out = "model.ckpt";
  TrainConfig tc;
  train_cmd->add_option("--photos", train_photos, "EMB1 raw photo features")->required();
  train_cmd->add_option("--sketches", train_sketches, "EMB1 raw sketch features")->required();
  train_cmd->add_option("--pairs", train_pairs, "pairs.json")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path")->capture_default_str();
  train_cmd->add_option("--embed-dim", tc.embed_dim)->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--margin", tc.margin)->capture_default_str();
  train_cmd->add_option("--seed", tc.seed.value)->capture_default_str();

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "embed raw features with a trained checkpoint");
  std::string embed_model, embed_in, embed_out;
  embed_cmd->add_option("--model", embed_model, "checkpoint")->required();
  embed_cmd->add_option("--input", embed_in, "EMB1 raw features")->required();
  embed_cmd->add_option("--out", embed_out, "EMB1 output path")->required();

  // score
  auto* score = app.add_subcommand("score", "violation index of every unlabeled photo (id,vi CSV)");
  PoolArgs score_args;
  std::string score_out;
  score_args.add_to(score);
  score->add_option("--out", score_out, "CSV path (default stdout)");

  // sample
  auto* sample = app.add_subcommand("sample", "select photos to query (JSON list of IDs)");
  PoolArgs sample_args;
  std::string strategy_name = "vi_diverse", sample_out;
  std::size_t budget = 1;
  double alpha = 0.0;
  std::uint64_t sample_seed = 0;
  sample_args.add_to(sample);
  sample->add_option("--strategy", strategy_name)
      ->check(CLI::IsMember({"random", "kmeans_centroid", "coreset", "vi_min", "vi_max",
                             "vi_ensemble", "vi_diverse"}))
      ->capture_default_str();
  sample->add_option("--budget", budget)->required();
  sample->add_option("--alpha", alpha, "fraction of the budget taken from the minimum-VI side")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sample->add_option("--seed", sample_seed)->capture_default_str();
  sample->add_option("--out", sample_out, "JSON path (default stdout)");

  // eval
  auto* eval = app.add_subcommand("eval", "acc@q of sketch queries against a gallery (q,acc CSV)");
  std::string eval_sketches, eval_gallery, eval_pairs, eval_out;
  std::vector<std::size_t> eval_q = {1, 10};
  bool eval_no_normalize = false;
  eval->add_option("--sketches", eval_sketches, "EMB1 sketch embeddings")->required();
  eval->add_option("--gallery", eval_gallery, "EMB1 photo embeddings")->required();
  eval->add_option("--pairs", eval_pairs, "pairs.json")->required();
  eval->add_option("--q", eval_q, "cutoffs")->delimiter(',')->capture_default_str();
  eval->add_flag("--no-normalize", eval_no_normalize);
  eval->add_option("--out", eval_out, "CSV path (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "run an active-learning experiment");
  std::string config_path, run_out;
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out-dir", run_out, std::string("output directory (overrides ") + kOutputDirEnv +
                                            " and the config)");

  // plot
  auto* plot = app.add_subcommand("plot", "render results.csv as an SVG line chart");
  std::string plot_in, plot_out = "results.svg";
  plot->add_option("--results", plot_in, "results.csv")->required();
  plot->add_option("--out", plot_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto data = generate(synth);
      fs::create_directories(gen_dir);
      save_embeddings(data.photos, fs::path(gen_dir) / "photos.emb");
      save_embeddings(data.sketches, fs::path(gen_dir) / "sketches.emb");
      save_pairing(data.pairing, fs::path(gen_dir) / "pairs.json");
      std::cerr << "wrote " << data.photos.size() << " photo/sketch pairs to " << gen_dir << "\n";
    } else if (*train_cmd) {
      const auto photos = load_embeddings(train_photos);
      const auto sketches = load_embeddings(train_sketches);
      const auto pool = pair_up(photos, sketches, load_pairing(train_pairs));
      const auto result = train(pool.photos, pool.sketches, tc);
      save_checkpoint(result.model, train_out);
      std::cerr << "final loss " << result.final_loss << ", checkpoint " << train_out << "\n";
    } else if (*embed_cmd) {
      const auto model = load_checkpoint(embed_model);
      save_embeddings(model.embed_all(load_embeddings(embed_in)), embed_out);
    } else if (*score) {
      const auto [labeled, unlabeled] = score_args.load();
      const auto scores = score_pool(unlabeled, labeled);
      std::ostringstream csv;
      csv.precision(17);
      csv << "id,vi\n";
      for (std::size_t i = 0; i < scores.ids.size(); ++i) {
        csv << scores.ids[i] << "," << scores.vi[i] << "\n";
        if (scores.degenerate[i]) {
          std::cerr << "warning: photo " << scores.ids[i] << " coincides with a labeled sketch\n";
        }
      }
      write_or_print(csv.str(), score_out);
    } else if (*sample) {
      const auto [labeled, unlabeled] = sample_args.load();
      SamplingRequest req{labeled, unlabeled};
      req.budget = budget;
      req.alpha = alpha;
      req.seed = Seed{sample_seed};
      req.strategy = strategy_from_string(strategy_name);
      const auto q = select(req);
      write_or_print(nlohmann::json(q.ids).dump() + "\n", sample_out);
    } else if (*eval) {
      const auto sketches = load_maybe_normalized(eval_sketches, !eval_no_normalize);
      const auto gallery = load_maybe_normalized(eval_gallery, !eval_no_normalize);
      const auto result = evaluate_retrieval(sketches, gallery, load_pairing(eval_pairs), eval_q);
      std::ostringstream csv;
      csv.precision(17);
      csv << "q,acc\n";
      for (const auto& [q, acc] : result.acc_at) csv << q << "," << acc << "\n";
      write_or_print(csv.str(), eval_out);
    } else if (*run) {
      auto config = load_experiment_config(config_path);
      if (const char* env = std::getenv(kOutputDirEnv); env && *env) config.output_dir = env;
      if (!run_out.empty()) config.output_dir = run_out;
      if (config.seeds.size() < 2) {
        throw ContractViolation("run needs at least 2 seeds to report mean and std");
      }
      const auto result = run_experiment(config);
      const auto files = emit_experiment(result, config.output_dir);
      write_text_file(config.output_dir / "config.json", config_to_json(config));
      std::cerr << "wrote " << files.results_csv.string() << ", " << files.results_svg.string();
      if (files.crossover_csv) std::cerr << ", " << files.crossover_csv->string();
      std::cerr << "\n";
    } else if (*plot) {
      write_text_file(plot_out, results_svg(parse_results_csv(read_text_file(plot_in))));
    }
  } catch (const std::exception& e) {
    std::cerr << "vi-sampler: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
