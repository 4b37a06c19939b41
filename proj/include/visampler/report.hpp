#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "visampler/runner.hpp"

namespace visampler {

/// Mean and population (n-denominator) standard deviation across seeds.
struct RoundAggregate {
  std::size_t round = 0;
  Arm arm;
  double mean_acc1 = 0.0;
  double std_acc1 = 0.0;
  double mean_acc10 = 0.0;
  double std_acc10 = 0.0;
  std::size_t n_seeds = 0;
};

/// Per arm (config order) and round. Needs at least two seeds whose runs
/// cover the same arms and round counts.
std::vector<RoundAggregate> aggregate(const ExperimentResult& result);

/// Population mean/std helper, exposed for tests.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

/// results.csv: round,strategy,alpha,mean_acc1,std_acc1,mean_acc10,std_acc10.
/// Reals use the shortest round-trip representation.
std::string results_csv(const std::vector<RoundAggregate>& aggregates);
std::vector<RoundAggregate> parse_results_csv(const std::string& text);

/// One line per seed/arm/round, including wall time and selected IDs.
std::string rounds_csv(const ExperimentResult& result);

/// Line chart of mean acc@1 per arm with a shaded +-1 sigma band.
std::string results_svg(const std::vector<RoundAggregate>& aggregates);

/// vi_min vs vi_max mean acc@1 curves with the leader per round.
struct CrossoverReport {
  std::vector<std::size_t> rounds;
  std::vector<double> vi_min_acc1;
  std::vector<double> vi_max_acc1;
  std::vector<std::string> leader;  // "vi_min", "vi_max" or "tie"
  /// "min_then_max", "max_then_min", "vi_min_throughout", "vi_max_throughout"
  /// or "tie"; computed from the first and last rounds with a leader.
  std::string status;
};

/// Empty optional when the aggregates lack a vi_min or vi_max arm.
std::optional<CrossoverReport> crossover(const std::vector<RoundAggregate>& aggregates);
std::string crossover_csv(const CrossoverReport& report);

struct EmittedFiles {
  std::filesystem::path results_csv;
  std::filesystem::path results_svg;
  std::optional<std::filesystem::path> crossover_csv;
  std::optional<std::filesystem::path> rounds_csv;
};

/// Writes results.csv, results.svg and, when both vi_min and vi_max are
/// present, crossover.csv into `dir` (created if missing).
EmittedFiles emit_results(const std::vector<RoundAggregate>& aggregates,
                          const std::filesystem::path& dir);

/// emit_results on the aggregates plus the per-seed rounds.csv.
EmittedFiles emit_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

/// Text to file, throwing EmbIoError(io) on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace visampler
