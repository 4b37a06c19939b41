#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "test_support.hpp"
#include "visampler/samplers.hpp"

using namespace visampler;
using namespace visampler::testing;

namespace {

QuerySet run(Strategy s, const LabeledPool& l, const UnlabeledPool& u, std::size_t k,
             double alpha = 0.0, std::uint64_t seed = 0) {
  SamplingRequest req{l, u};
  req.strategy = s;
  req.budget = k;
  req.alpha = alpha;
  req.seed = Seed{seed};
  return select(req);
}

std::set<std::string> as_set(const QuerySet& q) { return {q.ids.begin(), q.ids.end()}; }

// Sort-based reference: p lowest and K-p highest VI, ties by ID.
std::set<std::string> oracle_ensemble(const LabeledPool& l, const UnlabeledPool& u,
                                      std::size_t k, double alpha) {
  std::vector<std::pair<double, std::string>> items;
  for (std::size_t i = 0; i < u.size(); ++i) {
    items.emplace_back(oracle_vi(to_vec(u.photos.row(i)), l), u.photos.id(i));
  }
  const auto p = static_cast<std::size_t>(std::lround(alpha * static_cast<double>(k)));
  auto asc = items;
  std::sort(asc.begin(), asc.end());
  auto desc = items;
  std::sort(desc.begin(), desc.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::set<std::string> out;
  for (std::size_t i = 0; i < p; ++i) out.insert(asc[i].second);
  for (std::size_t i = 0; out.size() < k; ++i) out.insert(desc[i].second);
  return out;
}

const LabeledPool& line_labeled() {
  static const LabeledPool l(from_rows('p', {{0}}), from_rows('s', {{0.5}}, Modality::sketch));
  return l;
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (Strategy s : all_strategies()) CHECK(strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(strategy_from_string("greedy"), ContractViolation);
}

TEST_CASE("min side count") {
  CHECK(min_side_count(0.3, 10) == 3);
  CHECK(min_side_count(0.0, 7) == 0);
  CHECK(min_side_count(1.0, 7) == 7);
  CHECK(min_side_count(0.5, 1) == 1);
  CHECK(min_side_count(0.25, 2) == 1);
}

TEST_CASE("random sampling") {
  Rng rng(Seed{1});
  const auto l = random_labeled(rng, 3, 2);
  const auto u = random_unlabeled(rng, 10, 2);
  CHECK(as_set(run(Strategy::random, l, u, 10)) ==
        std::set<std::string>(u.photos.ids().begin(), u.photos.ids().end()));
  CHECK(run(Strategy::random, l, u, 4, 0, 9).ids == run(Strategy::random, l, u, 4, 0, 9).ids);

  std::map<std::string, int> freq;
  constexpr int n = 10000;
  for (int s = 0; s < n; ++s) ++freq[run(Strategy::random, l, u, 1, 0, s).ids[0]];
  for (const auto& id : u.photos.ids()) CHECK(std::abs(freq[id] / double(n) - 0.1) < 0.01);
}

TEST_CASE("kmeans_centroid picks the member nearest each blob mean") {
  UnlabeledPool u{from_rows('u', {{0, 0}, {0, 1}, {0, 3}, {10, 10}, {10, 11}, {10, 13}})};
  const auto q = run(Strategy::kmeans_centroid, LabeledPool{}, u, 2, 0, 3);
  CHECK(as_set(q) == std::set<std::string>{"u0001", "u0004"});
  CHECK(as_set(run(Strategy::kmeans_centroid, LabeledPool{}, u, 6)).size() == 6);
}

TEST_CASE("kmeans_centroid tie-break is seeded") {
  // Two identical points at the single centroid.
  UnlabeledPool u{from_rows('u', {{1, 1}, {1, 1}})};
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto a = run(Strategy::kmeans_centroid, LabeledPool{}, u, 1, 0, s);
    CHECK(a.ids == run(Strategy::kmeans_centroid, LabeledPool{}, u, 1, 0, s).ids);
    seen.insert(a.ids[0]);
  }
  CHECK(seen.size() == 2);
}

TEST_CASE("coreset hand example") {
  UnlabeledPool u{from_rows('u', {{1}, {4}, {5}})};
  const auto q = run(Strategy::coreset, line_labeled(), u, 2);
  CHECK(q.ids == std::vector<std::string>{"u0002", "u0000"});
}

TEST_CASE("coreset ties go to the lowest index") {
  UnlabeledPool u{from_rows('u', {{2}, {-2}, {2}})};
  CHECK(run(Strategy::coreset, line_labeled(), u, 1).ids == std::vector<std::string>{"u0000"});
}

TEST_CASE("coreset matches the exhaustive greedy oracle") {
  Rng rng(Seed{12});
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng.uniform_index(4);
    const std::size_t n_l = rng.uniform_index(4);
    const std::size_t n_u = 1 + rng.uniform_index(12 - n_l);
    const LabeledPool l = n_l == 0 ? LabeledPool{} : random_labeled(rng, n_l, d);
    const auto u = random_unlabeled(rng, n_u, d);
    const std::size_t k = 1 + rng.uniform_index(n_u);
    std::vector<std::vector<double>> lab, pool;
    for (std::size_t i = 0; i < n_l; ++i) lab.push_back(to_vec(l.photos.row(i)));
    for (std::size_t i = 0; i < n_u; ++i) pool.push_back(to_vec(u.photos.row(i)));
    std::vector<std::string> expected;
    for (std::size_t i : oracle_coreset(lab, pool, k)) expected.push_back(u.photos.id(i));
    CHECK(run(Strategy::coreset, l, u, k).ids == expected);
  }
}

TEST_CASE("coreset is permutation covariant") {
  Rng rng(Seed{13});
  for (int t = 0; t < 30; ++t) {
    const auto l = random_labeled(rng, 2, 3);
    const auto u = random_unlabeled(rng, 10, 3);
    std::vector<std::size_t> perm(u.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    const UnlabeledPool shuffled{u.photos.subset(perm)};
    CHECK(run(Strategy::coreset, l, u, 4).ids == run(Strategy::coreset, l, shuffled, 4).ids);
  }
}

TEST_CASE("vi_ensemble split and boundaries") {
  Rng rng(Seed{14});
  const auto l = random_labeled(rng, 5, 3);
  const auto u = random_unlabeled(rng, 20, 3);
  const auto scores = score_pool(u, l);
  const auto q = run(Strategy::vi_ensemble, l, u, 10, 0.3);
  const auto asc = order_by_vi_ascending(scores);
  std::set<std::string> low3, high7;
  for (std::size_t i = 0; i < 3; ++i) low3.insert(scores.ids[asc[i]]);
  const auto desc = order_by_vi_descending(scores);
  for (std::size_t i = 0; i < 7; ++i) high7.insert(scores.ids[desc[i]]);
  auto both = low3;
  both.insert(high7.begin(), high7.end());
  CHECK(as_set(q) == both);

  CHECK(as_set(run(Strategy::vi_ensemble, l, u, 6, 0.0)) == as_set(run(Strategy::vi_max, l, u, 6)));
  CHECK(as_set(run(Strategy::vi_ensemble, l, u, 6, 1.0)) == as_set(run(Strategy::vi_min, l, u, 6)));
}

TEST_CASE("vi_ensemble matches the sort oracle") {
  Rng rng(Seed{15});
  for (int t = 0; t < 100; ++t) {
    const auto l = random_labeled(rng, 1 + rng.uniform_index(6), 3);
    const auto u = random_unlabeled(rng, 20, 3);
    const std::size_t k = 1 + rng.uniform_index(20);
    const double alpha = rng.uniform_index(11) / 10.0;
    CHECK(as_set(run(Strategy::vi_ensemble, l, u, k, alpha)) == oracle_ensemble(l, u, k, alpha));
  }
}

TEST_CASE("vi_diverse with one pick is the global VI maximum") {
  Rng rng(Seed{16});
  const auto l = random_labeled(rng, 4, 3);
  const auto u = random_unlabeled(rng, 15, 3);
  CHECK(run(Strategy::vi_diverse, l, u, 1, 0.0).ids == run(Strategy::vi_max, l, u, 1).ids);
  CHECK(run(Strategy::vi_diverse, l, u, 1, 1.0).ids == run(Strategy::vi_min, l, u, 1).ids);
}

TEST_CASE("vi_diverse takes the min-VI member of each blob") {
  const auto& l = line_labeled();
  UnlabeledPool u{from_rows('u', {{10}, {11}, {12}, {-20}, {-21}, {-22}})};
  const auto scores = score_pool(u, l);
  // VI falls with distance from the labeled sketch at 0.5.
  for (std::size_t i = 0; i + 1 < 3; ++i) CHECK(scores.vi[i] > scores.vi[i + 1]);
  CHECK(as_set(run(Strategy::vi_diverse, l, u, 2, 1.0)) ==
        std::set<std::string>{"u0002", "u0005"});
  CHECK(as_set(run(Strategy::vi_diverse, l, u, 2, 0.0)) ==
        std::set<std::string>{"u0000", "u0003"});
}

TEST_CASE("vi_diverse backfills when clusters collapse") {
  const auto& l = line_labeled();
  UnlabeledPool u{from_rows('u', {{3}, {3}, {3}, {7}})};
  const auto q = run(Strategy::vi_diverse, l, u, 3, 0.0, 5);
  CHECK(q.ids.size() == 3);
}

TEST_CASE("every strategy returns a valid query set") {
  Rng rng(Seed{17});
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.uniform_index(6);
    const auto l = random_labeled(rng, 1 + rng.uniform_index(8), d);
    const auto u = random_unlabeled(rng, 1 + rng.uniform_index(30), d);
    const std::size_t k = 1 + rng.uniform_index(u.size());
    const double alpha = rng.uniform01();
    for (Strategy s : all_strategies()) {
      const auto q = run(s, l, u, k, alpha, t);
      CHECK_NOTHROW(validate_query_set(q, u, k));
    }
  }
}

TEST_CASE("VI-based selections survive common rescaling") {
  Rng rng(Seed{18});
  for (int t = 0; t < 30; ++t) {
    const auto l = random_labeled(rng, 5, 3);
    const auto u = random_unlabeled(rng, 25, 3);
    // A power of two scales every distance exactly.
    const double c = 8.0;
    const LabeledPool ls(l.photos.scaled(c), l.sketches.scaled(c));
    const UnlabeledPool us{u.photos.scaled(c)};
    for (Strategy s : {Strategy::vi_min, Strategy::vi_max, Strategy::vi_ensemble,
                       Strategy::vi_diverse}) {
      SamplingRequest a{l, u}, b{ls, us};
      a.strategy = b.strategy = s;
      a.budget = b.budget = 6;
      a.alpha = b.alpha = 0.5;
      a.seed = b.seed = Seed{static_cast<std::uint64_t>(t)};
      b.lloyd_tol = a.lloyd_tol * c;
      CHECK(as_set(select(a)) == as_set(select(b)));
    }
  }
}

TEST_CASE("request validation") {
  Rng rng(Seed{19});
  const auto l = random_labeled(rng, 3, 2);
  const auto u = random_unlabeled(rng, 5, 2);
  CHECK_THROWS_AS(run(Strategy::random, l, u, 0), ContractViolation);
  CHECK_THROWS_AS(run(Strategy::random, l, u, 6), ContractViolation);
  CHECK_THROWS_AS(run(Strategy::vi_ensemble, l, u, 2, 1.5), ContractViolation);
  CHECK_THROWS_AS(run(Strategy::vi_ensemble, l, u, 2, -0.1), ContractViolation);
  const UnlabeledPool overlap{l.photos};
  CHECK_THROWS_AS(run(Strategy::random, l, overlap, 1), ContractViolation);
  CHECK_THROWS_AS(validate_query_set(QuerySet{{"u0000", "u0000"}}, u, 2), ContractViolation);
  CHECK_THROWS_AS(validate_query_set(QuerySet{{"zzz"}}, u, 1), ContractViolation);
}
