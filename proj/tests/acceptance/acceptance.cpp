// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Every tolerance and size is pinned below.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "gradient_check.hpp"
#include "test_support.hpp"
#include "visampler/clustering.hpp"
#include "visampler/emb_io.hpp"
#include "visampler/report.hpp"
#include "visampler/retrieval.hpp"
#include "visampler/runner.hpp"
#include "visampler/samplers.hpp"
#include "visampler/violation.hpp"

using namespace visampler;
using namespace visampler::testing;
namespace fs = std::filesystem;

namespace {

// VI oracle equivalence
constexpr int kViInstances = 200;
constexpr std::size_t kViMaxLabeled = 50;
constexpr std::size_t kViMaxUnlabeled = 100;
constexpr std::size_t kViMaxDim = 16;
constexpr double kViRelTol = 1e-12;
constexpr double kViSeconds = 5.0;

// VI hand example
constexpr double kHandValue = 1.2071067;
constexpr double kHandTol = 1e-9;

// vi_ensemble boundaries
constexpr int kBoundaryInstances = 100;

// k-means++ seeding
constexpr int kKppDraws = 100000;
constexpr double kKppTol = 0.01;

// Coreset oracle
constexpr int kCoresetInstances = 2000;
constexpr std::size_t kCoresetMaxPoints = 12;

// Gradient check
constexpr int kGradPoints = 20;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;

// Retrieval
constexpr int kRetrievalInstances = 100;

// AL experiments
constexpr std::size_t kPairedSeeds = 20;
constexpr std::uint64_t kEvalSeedBase = 1;
constexpr std::uint64_t kTuneSeedBase = 1001;
constexpr std::size_t kRounds = 5;
constexpr double kAlphaGrid[] = {0.0, 0.3, 0.7, 1.0};
constexpr double kExperimentSeconds = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path output_root() {
  if (const char* env = std::getenv("VI_SAMPLER_OUTPUT_DIR"); env && *env) {
    return fs::path(env) / "acceptance";
  }
  return fs::current_path() / "acceptance_out";
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = base + i;
  return s;
}

std::set<std::string> as_set(const QuerySet& q) { return {q.ids.begin(), q.ids.end()}; }

Outcome vi_oracle() {
  Rng rng(Seed{101});
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int t = 0; t < kViInstances; ++t) {
    const std::size_t d = 1 + rng.uniform_index(kViMaxDim);
    const auto l = random_labeled(rng, 1 + rng.uniform_index(kViMaxLabeled), d);
    const auto u = random_unlabeled(rng, 1 + rng.uniform_index(kViMaxUnlabeled), d);
    const auto s = score_pool(u, l);
    for (std::size_t i = 0; i < u.size(); ++i) {
      worst = std::max(worst, rel_err(s.vi[i], oracle_vi(to_vec(u.photos.row(i)), l)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kViRelTol && secs < kViSeconds,
          fmt("max rel err %.3g", worst) + fmt(", %.2f s", secs)};
}

Outcome vi_hand() {
  const LabeledPool l(from_rows('p', {{0, 0}, {2, 0}}),
                      from_rows('s', {{0, 1}, {2, 2}}, Modality::sketch));
  const double v = violation_index(std::vector<double>{1, 1}, l);
  // Hand arithmetic: 0.5 * (1 / 1 + 2 / sqrt(2)); the quoted 1.2071067 is
  // this value truncated to seven decimals.
  const double derived = 0.5 * (1.0 / (1.0 + kViEpsilon) + 2.0 / (std::sqrt(2.0) + kViEpsilon));
  const bool truncates = std::floor(v * 1e7) / 1e7 == kHandValue;
  return {std::abs(v - derived) <= kHandTol && truncates,
          fmt("VI = %.12f", v) + fmt(", derived %.12f", derived)};
}

Outcome boundaries() {
  Rng rng(Seed{102});
  int matched = 0;
  for (int t = 0; t < kBoundaryInstances; ++t) {
    const std::size_t d = 1 + rng.uniform_index(8);
    const auto l = random_labeled(rng, 1 + rng.uniform_index(10), d);
    const auto u = random_unlabeled(rng, 2 + rng.uniform_index(40), d);
    const std::size_t k = 1 + rng.uniform_index(u.size());
    auto pick = [&](Strategy s, double alpha) {
      SamplingRequest r{l, u};
      r.strategy = s;
      r.budget = k;
      r.alpha = alpha;
      return as_set(select(r));
    };
    // Reference top/bottom-K from the brute-force scores.
    std::vector<std::pair<double, std::string>> sc;
    for (std::size_t i = 0; i < u.size(); ++i) {
      sc.emplace_back(oracle_vi(to_vec(u.photos.row(i)), l), u.photos.id(i));
    }
    auto asc = sc;
    std::sort(asc.begin(), asc.end());
    auto desc = sc;
    std::sort(desc.begin(), desc.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::set<std::string> lo, hi;
    for (std::size_t i = 0; i < k; ++i) {
      lo.insert(asc[i].second);
      hi.insert(desc[i].second);
    }
    const auto e0 = pick(Strategy::vi_ensemble, 0.0);
    const auto e1 = pick(Strategy::vi_ensemble, 1.0);
    if (e0 == pick(Strategy::vi_max, 0.0) && e1 == pick(Strategy::vi_min, 0.0) && e0 == hi &&
        e1 == lo) {
      ++matched;
    }
  }
  return {matched == kBoundaryInstances,
          std::to_string(matched) + "/" + std::to_string(kBoundaryInstances) + " instances"};
}

Outcome kpp_frequencies() {
  const auto pts = from_rows('l', {{0}, {1}, {4}});
  int ones = 0, fours = 0;
  for (int i = 0; i < kKppDraws; ++i) {
    Rng rng(derive(Seed{103}, "draw", static_cast<std::uint64_t>(i)));
    const auto idx = kmeanspp_seed_indices(pts, 2, rng, 0);
    if (idx[1] == 1) ++ones;
    if (idx[1] == 2) ++fours;
  }
  const double f1 = ones / double(kKppDraws), f4 = fours / double(kKppDraws);
  const bool ok = std::abs(f1 - 1.0 / 17.0) <= kKppTol && std::abs(f4 - 16.0 / 17.0) <= kKppTol;
  return {ok, fmt("P(1) = %.4f", f1) + fmt(", P(4) = %.4f", f4)};
}

Outcome coreset_oracle() {
  Rng rng(Seed{104});
  int matched = 0;
  for (int t = 0; t < kCoresetInstances; ++t) {
    const std::size_t d = 1 + rng.uniform_index(3);
    const std::size_t total = 2 + rng.uniform_index(kCoresetMaxPoints - 1);
    const std::size_t n_l = rng.uniform_index(std::min<std::size_t>(4, total));
    const std::size_t n_u = total - n_l;
    // Half the instances sit on a small integer grid to force distance ties.
    const bool grid = t % 2 == 0;
    auto coord = [&] { return grid ? static_cast<double>(rng.uniform_index(4)) : rng.normal(); };
    std::vector<std::vector<double>> lab(n_l, std::vector<double>(d)),
        pool(n_u, std::vector<double>(d));
    for (auto& r : lab)
      for (double& v : r) v = coord();
    for (auto& r : pool)
      for (double& v : r) v = coord();
    const LabeledPool l = n_l == 0 ? LabeledPool{}
                                   : LabeledPool(from_rows('p', lab),
                                                 from_rows('s', lab, Modality::sketch));
    const UnlabeledPool u{from_rows('u', pool)};
    const std::size_t k = 1 + rng.uniform_index(n_u);
    SamplingRequest r{l, u};
    r.strategy = Strategy::coreset;
    r.budget = k;
    std::vector<std::string> expected;
    for (std::size_t i : oracle_coreset(lab, pool, k)) expected.push_back(u.photos.id(i));
    if (select(r).ids == expected) ++matched;
  }
  return {matched == kCoresetInstances,
          std::to_string(matched) + "/" + std::to_string(kCoresetInstances) +
              " exact sequence matches"};
}

Outcome gradient() {
  Rng rng(Seed{105});
  double worst = 0.0;
  int points = 0;
  while (points < kGradPoints) {
    const auto pt = random_gradient_point(rng, 8, 4);
    if (!pt) continue;
    worst = std::max(worst, gradient_relative_error(*pt, kGradStep));
    ++points;
  }
  return {worst < kGradRelTol, std::to_string(points) + " points, max rel err " +
                                   fmt("%.3g", worst)};
}

Outcome retrieval() {
  Rng rng(Seed{106});
  int ok = 0;
  for (int t = 0; t < kRetrievalInstances; ++t) {
    const std::size_t m = 2 + rng.uniform_index(40);
    const auto g = random_matrix(rng, 'g', m, 4);
    const auto s = random_matrix(rng, 's', m, 4, Modality::sketch);
    std::map<std::string, std::string> pairs;
    for (std::size_t i = 0; i < m; ++i) pairs[g.id(i)] = s.id(i);
    const Pairing truth(pairs);
    std::vector<std::size_t> qs;
    for (std::size_t q = 1; q <= m; ++q) qs.push_back(q);
    const auto r = evaluate_retrieval(s, g, truth, qs);
    bool good = r.acc_at.at(m) == 1.0;
    for (std::size_t q = 2; q <= m; ++q) good = good && r.acc_at.at(q - 1) <= r.acc_at.at(q);
    for (std::size_t i = 0; i < m; ++i) {
      good = good && retrieve(s.row(i), g, m) == oracle_rank(to_vec(s.row(i)), g);
    }
    if (good) ++ok;
  }
  return {ok == kRetrievalInstances,
          std::to_string(ok) + "/" + std::to_string(kRetrievalInstances) + " instances"};
}

double final_acc1(const ArmRun& arm) { return arm.records.back().acc1; }

Outcome fig3() {
  const auto t0 = std::chrono::steady_clock::now();

  // Pick alpha on tuning seeds that are disjoint from the reported ones.
  ExperimentConfig tune;
  tune.rounds = kRounds;
  tune.seeds = seed_range(kTuneSeedBase, kPairedSeeds);
  tune.arms.clear();
  for (double a : kAlphaGrid) tune.arms.push_back(Arm{Strategy::vi_diverse, a});
  const auto tune_aggs = aggregate(run_experiment(tune));
  double best_alpha = kAlphaGrid[0], best_acc = -1.0;
  for (const auto& a : tune_aggs) {
    if (a.round == kRounds - 1 && a.mean_acc1 > best_acc) {
      best_acc = a.mean_acc1;
      best_alpha = a.arm.alpha;
    }
  }

  ExperimentConfig eval;
  eval.rounds = kRounds;
  eval.seeds = seed_range(kEvalSeedBase, kPairedSeeds);
  eval.arms = {Arm{Strategy::random}, Arm{Strategy::vi_diverse, best_alpha}};
  const auto res = run_experiment(eval);
  double sum_vi = 0.0, sum_rand = 0.0, sum_diff = 0.0;
  int wins = 0;
  for (const auto& run : res.runs) {
    const double r = final_acc1(run.arms[0]);
    const double v = final_acc1(run.arms[1]);
    sum_rand += r;
    sum_vi += v;
    sum_diff += v - r;
    if (v > r) ++wins;
  }
  const double n = static_cast<double>(res.runs.size());
  emit_experiment(res, output_root() / "fig3");
  const double secs = seconds_since(t0);
  const double diff = sum_diff / n;
  const bool ok = sum_vi / n >= sum_rand / n && diff > 0.0 && secs < kExperimentSeconds;
  std::ostringstream d;
  d << "alpha=" << best_alpha << fmt(", vi_diverse %.4f", sum_vi / n)
    << fmt(" vs random %.4f", sum_rand / n) << fmt(", paired diff %+.4f", diff) << ", wins "
    << wins << "/" << res.runs.size() << fmt(", %.1f s", secs);
  return {ok, d.str()};
}

Outcome crossover_emitted() {
  ExperimentConfig c;
  c.rounds = kRounds;
  c.seeds = seed_range(kEvalSeedBase, kPairedSeeds);
  c.arms = {Arm{Strategy::vi_min}, Arm{Strategy::vi_max}};
  const auto files = emit_experiment(run_experiment(c), output_root() / "crossover");
  if (!files.crossover_csv) return {false, "no crossover.csv written"};
  const auto text = read_text_file(*files.crossover_csv);
  const auto status_at = text.find("# status,");
  const std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  const bool ok = status_at != std::string::npos && lines == kRounds + 2;
  std::string status =
      ok ? text.substr(status_at + 9, text.find('\n', status_at) - status_at - 9) : "missing";
  return {ok, "status " + status + ", " + files.crossover_csv->string()};
}

Outcome determinism() {
  ExperimentConfig c;
  c.rounds = 3;
  c.seeds = {5, 6, 7};
  c.arms = {Arm{Strategy::vi_diverse, 0.3}, Arm{Strategy::kmeans_centroid},
            Arm{Strategy::coreset}, Arm{Strategy::random}};
  const auto root = output_root() / "determinism";
  c.threads = 1;
  const auto a = emit_experiment(run_experiment(c), root / "a");
  c.threads = 3;
  const auto b = emit_experiment(run_experiment(c), root / "b");
  const auto ba = read_file_bytes(a.results_csv);
  const auto bb = read_file_bytes(b.results_csv);
  return {ba == bb && !ba.empty(), std::to_string(ba.size()) + " bytes, " +
                                       (ba == bb ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"vi-oracle-equivalence", vi_oracle},
      {"vi-hand-example", vi_hand},
      {"vi-ensemble-boundaries", boundaries},
      {"kmeanspp-seeding-frequencies", kpp_frequencies},
      {"coreset-oracle", coreset_oracle},
      {"triplet-gradient-check", gradient},
      {"retrieval-correctness", retrieval},
      {"vi-diverse-beats-random", fig3},
      {"vi-min-max-crossover-emitted", crossover_emitted},
      {"results-csv-determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
