#include "visampler/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "visampler/clustering.hpp"

namespace visampler {

namespace {

void require_valid(const SamplingRequest& req) {
  const std::size_t n = req.unlabeled.size();
  if (req.budget == 0) throw ContractViolation("sampling budget must be positive");
  if (req.budget > n) {
    throw ContractViolation("sampling budget " + std::to_string(req.budget) +
                            " exceeds unlabeled pool size " + std::to_string(n));
  }
  if (!(req.alpha >= 0.0 && req.alpha <= 1.0)) {
    throw ContractViolation("alpha must lie in [0, 1], got " + std::to_string(req.alpha));
  }
  if (req.labeled.size() > 0 && req.labeled.dim() != req.unlabeled.dim()) {
    throw ContractViolation("labeled dim " + std::to_string(req.labeled.dim()) +
                            " != unlabeled dim " + std::to_string(req.unlabeled.dim()));
  }
  check_disjoint(req.labeled, req.unlabeled);
}

QuerySet to_query_set(const UnlabeledPool& pool, const std::vector<std::size_t>& rows) {
  QuerySet q;
  q.ids.reserve(rows.size());
  for (std::size_t r : rows) q.ids.push_back(pool.photos.id(r));
  return q;
}

// Takes up to `count` rows from `order` that are not yet in `chosen`.
void take_unchosen(const std::vector<std::size_t>& order, std::size_t count,
                   std::vector<bool>& chosen, std::vector<std::size_t>& out) {
  for (std::size_t r : order) {
    if (count == 0) break;
    if (chosen[r]) continue;
    chosen[r] = true;
    out.push_back(r);
    --count;
  }
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::kmeans_centroid: return "kmeans_centroid";
    case Strategy::coreset: return "coreset";
    case Strategy::vi_min: return "vi_min";
    case Strategy::vi_max: return "vi_max";
    case Strategy::vi_ensemble: return "vi_ensemble";
    case Strategy::vi_diverse: return "vi_diverse";
  }
  return "unknown";
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {
      Strategy::random, Strategy::kmeans_centroid, Strategy::coreset,   Strategy::vi_min,
      Strategy::vi_max, Strategy::vi_ensemble,     Strategy::vi_diverse};
  return all;
}

Strategy strategy_from_string(std::string_view s) {
  for (Strategy st : all_strategies()) {
    if (to_string(st) == s) return st;
  }
  throw ContractViolation("unknown strategy '" + std::string(s) + "'");
}

std::size_t min_side_count(double alpha, std::size_t budget) {
  return static_cast<std::size_t>(std::lround(alpha * static_cast<double>(budget)));
}

std::vector<std::size_t> order_by_vi_ascending(const ViScores& scores) {
  std::vector<std::size_t> order(scores.vi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.vi[a] != scores.vi[b]) return scores.vi[a] < scores.vi[b];
    return scores.ids[a] < scores.ids[b];
  });
  return order;
}

std::vector<std::size_t> order_by_vi_descending(const ViScores& scores) {
  std::vector<std::size_t> order(scores.vi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.vi[a] != scores.vi[b]) return scores.vi[a] > scores.vi[b];
    return scores.ids[a] < scores.ids[b];
  });
  return order;
}

QuerySet sample_random(const SamplingRequest& req) {
  require_valid(req);
  const std::size_t n = req.unlabeled.size();
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng(derive(req.seed, "random"));
  for (std::size_t i = 0; i < req.budget; ++i) {
    std::swap(rows[i], rows[i + rng.uniform_index(n - i)]);
  }
  rows.resize(req.budget);
  return to_query_set(req.unlabeled, rows);
}

QuerySet sample_kmeans_centroid(const SamplingRequest& req) {
  require_valid(req);
  const auto& photos = req.unlabeled.photos;
  const auto clustering = kmeans(photos, req.budget, derive(req.seed, "kmeans_centroid"),
                                 req.lloyd_max_iter, req.lloyd_tol);
  Rng tie_rng(derive(req.seed, "kmeans_centroid_tie"));

  std::vector<bool> chosen(photos.size(), false);
  std::vector<std::size_t> picks;
  const auto members = clustering.members();
  for (std::size_t c = 0; c < clustering.k; ++c) {
    if (members[c].empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> closest;
    for (std::size_t r : members[c]) {
      const double d = squared_distance(photos.row(r), clustering.centroids.row(c));
      if (d < best) {
        best = d;
        closest.assign(1, r);
      } else if (d == best) {
        closest.push_back(r);
      }
    }
    const std::size_t pick =
        closest.size() == 1 ? closest[0] : closest[tie_rng.uniform_index(closest.size())];
    chosen[pick] = true;
    picks.push_back(pick);
  }

  // Clusters that stayed empty (only possible with duplicate points) are
  // replaced by the remaining photos nearest to any centroid.
  if (picks.size() < req.budget) {
    std::vector<std::pair<double, std::size_t>> rest;
    for (std::size_t r = 0; r < photos.size(); ++r) {
      if (chosen[r]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < clustering.k; ++c) {
        best = std::min(best, squared_distance(photos.row(r), clustering.centroids.row(c)));
      }
      rest.emplace_back(best, r);
    }
    std::sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return photos.id(a.second) < photos.id(b.second);
    });
    for (std::size_t i = 0; picks.size() < req.budget; ++i) picks.push_back(rest[i].second);
  }
  return to_query_set(req.unlabeled, picks);
}

QuerySet sample_coreset(const SamplingRequest& req) {
  require_valid(req);
  const auto& photos = req.unlabeled.photos;
  const std::size_t n = photos.size();
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::vector<std::size_t> picks;

  auto add_pick = [&](std::size_t r) {
    chosen[r] = true;
    picks.push_back(r);
    for (std::size_t j = 0; j < n; ++j) {
      min_dist[j] = std::min(min_dist[j], euclidean_distance(photos.row(j), photos.row(r)));
    }
  };

  if (req.labeled.size() > 0) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < req.labeled.size(); ++i) {
        min_dist[j] = std::min(min_dist[j], euclidean_distance(photos.row(j),
                                                               req.labeled.photos.row(i)));
      }
    }
  } else {
    Vector mean(photos.dim(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < photos.dim(); ++k) mean[k] += photos.row(j)[k];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    std::size_t far = 0;
    double far_dist = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = euclidean_distance(photos.row(j), mean);
      if (d > far_dist) {
        far_dist = d;
        far = j;
      }
    }
    add_pick(far);
  }

  while (picks.size() < req.budget) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (chosen[j]) continue;
      if (best == n || min_dist[j] > min_dist[best]) best = j;
    }
    add_pick(best);
  }
  return to_query_set(req.unlabeled, picks);
}

QuerySet sample_vi_ensemble(const SamplingRequest& req) {
  require_valid(req);
  double alpha = req.alpha;
  if (req.strategy == Strategy::vi_min) alpha = 1.0;
  if (req.strategy == Strategy::vi_max) alpha = 0.0;
  const auto scores = score_pool(req.unlabeled, req.labeled);
  const std::size_t p = min_side_count(alpha, req.budget);

  std::vector<bool> chosen(req.unlabeled.size(), false);
  std::vector<std::size_t> picks;
  take_unchosen(order_by_vi_ascending(scores), p, chosen, picks);
  take_unchosen(order_by_vi_descending(scores), req.budget - p, chosen, picks);
  return to_query_set(req.unlabeled, picks);
}

QuerySet sample_vi_diverse(const SamplingRequest& req) {
  require_valid(req);
  const auto scores = score_pool(req.unlabeled, req.labeled);
  const auto clustering = kmeans(req.unlabeled.photos, req.budget,
                                 derive(req.seed, "vi_diverse"), req.lloyd_max_iter,
                                 req.lloyd_tol);
  const auto members = clustering.members();

  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < clustering.k; ++c) {
    if (!members[c].empty()) nonempty.push_back(c);
  }
  std::stable_sort(nonempty.begin(), nonempty.end(), [&](std::size_t a, std::size_t b) {
    return members[a].size() > members[b].size();
  });

  const std::size_t p = min_side_count(req.alpha, req.budget);
  auto lower = [&](std::size_t a, std::size_t b) {
    if (scores.vi[a] != scores.vi[b]) return scores.vi[a] < scores.vi[b];
    return scores.ids[a] < scores.ids[b];
  };
  auto higher = [&](std::size_t a, std::size_t b) {
    if (scores.vi[a] != scores.vi[b]) return scores.vi[a] > scores.vi[b];
    return scores.ids[a] < scores.ids[b];
  };

  std::vector<bool> chosen(req.unlabeled.size(), false);
  std::vector<std::size_t> picks;
  std::size_t min_used = 0;
  for (std::size_t rank = 0; rank < nonempty.size(); ++rank) {
    const auto& m = members[nonempty[rank]];
    const bool take_min = rank < p;
    const std::size_t pick = take_min ? *std::min_element(m.begin(), m.end(), lower)
                                      : *std::min_element(m.begin(), m.end(), higher);
    if (take_min) ++min_used;
    chosen[pick] = true;
    picks.push_back(pick);
  }

  if (picks.size() < req.budget) {
    const std::size_t max_used = picks.size() - min_used;
    take_unchosen(order_by_vi_ascending(scores), p - min_used, chosen, picks);
    take_unchosen(order_by_vi_descending(scores), (req.budget - p) - max_used, chosen, picks);
  }
  return to_query_set(req.unlabeled, picks);
}

QuerySet select(const SamplingRequest& req) {
  QuerySet q;
  switch (req.strategy) {
    case Strategy::random: q = sample_random(req); break;
    case Strategy::kmeans_centroid: q = sample_kmeans_centroid(req); break;
    case Strategy::coreset: q = sample_coreset(req); break;
    case Strategy::vi_min:
    case Strategy::vi_max:
    case Strategy::vi_ensemble: q = sample_vi_ensemble(req); break;
    case Strategy::vi_diverse: q = sample_vi_diverse(req); break;
  }
  validate_query_set(q, req.unlabeled, req.budget);
  return q;
}

void validate_query_set(const QuerySet& q, const UnlabeledPool& pool, std::size_t budget) {
  if (q.ids.size() != budget) {
    throw ContractViolation("query set has " + std::to_string(q.ids.size()) +
                            " ids, budget is " + std::to_string(budget));
  }
  std::set<std::string> seen;
  for (const auto& id : q.ids) {
    if (!pool.photos.contains(id)) {
      throw ContractViolation("query id '" + id + "' is not in the unlabeled pool");
    }
    if (!seen.insert(id).second) throw ContractViolation("query id '" + id + "' repeated");
  }
}

}  // namespace visampler
