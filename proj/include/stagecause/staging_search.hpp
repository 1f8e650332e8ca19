#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecause/dataset.hpp"
#include "stagecause/model.hpp"
#include "stagecause/probability.hpp"
#include "stagecause/rng.hpp"

namespace stagecause {

enum class StagingMethod { Bhc, Kmeans };

inline std::string to_string(StagingMethod m) { return m == StagingMethod::Bhc ? "bhc" : "kmeans"; }

inline StagingMethod parse_method(const std::string& s) {
  if (s == "bhc") return StagingMethod::Bhc;
  if (s == "kmeans") return StagingMethod::Kmeans;
  throw std::invalid_argument("unknown staging method '" + s + "' (expected bhc or kmeans)");
}

struct SearchOptions {
  StagingMethod method = StagingMethod::Bhc;
  int k = 2;          // k-means clusters
  int restarts = 10;  // k-means restarts
  std::uint64_t seed = 0;
  FitOptions fit{0.0, EmptyStage::Uniform};

  void check() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (fit.smoothing < 0.0) throw std::invalid_argument("smoothing must be nonnegative");
  }
};

struct StagingResult {
  std::vector<StageId> staging;  // dense, by first appearance
  double score = 0.0;            // stratum BIC contribution
  std::vector<double> trace;     // BHC: score before the first and after every merge
};

namespace detail {

// sum_x n_x log(n_x / n), zero-count cells contribute 0.
inline double stage_loglik(const double* n, std::size_t levels) {
  double total = 0.0;
  for (std::size_t x = 0; x < levels; ++x) total += n[x];
  if (total <= 0.0) return 0.0;
  double ll = 0.0;
  for (std::size_t x = 0; x < levels; ++x)
    if (n[x] > 0.0) ll += n[x] * std::log(n[x] / total);
  return ll;
}

}  // namespace detail

// -2 * stratum log-likelihood (pooled MLE) + stages * (levels - 1) * log N.
inline double stratum_bic(const StratumCounts& counts, const std::vector<StageId>& staging) {
  const auto pooled = detail::pooled_counts(counts, staging);
  const std::size_t m = stage_count(staging);
  double ll = 0.0;
  for (std::size_t s = 0; s < m; ++s) ll += detail::stage_loglik(pooled.data() + s * counts.levels, counts.levels);
  const double n = static_cast<double>(std::max<std::size_t>(counts.total, 1));
  return -2.0 * ll + static_cast<double>(m * (counts.levels - 1)) * std::log(n);
}

// Backward hill-climbing from the saturated staging: repeatedly apply the
// pairwise merge with the largest BIC decrease until none decreases it.
// Ties go to the lexicographically smallest (stage, stage) pair, where a
// stage is named by its smallest context index.
inline StagingResult bhc_stratum(const StratumCounts& counts) {
  const std::size_t n = counts.num_contexts();
  if (n == 0) throw std::invalid_argument("stratum has no contexts");
  const std::size_t l = counts.levels;
  const double penalty = static_cast<double>(l - 1) * std::log(static_cast<double>(std::max<std::size_t>(counts.total, 1)));

  std::vector<double> pooled(n * l);
  for (std::size_t c = 0; c < n; ++c) {
    auto row = counts.context(c);
    for (std::size_t x = 0; x < l; ++x) pooled[c * l + x] = row[x];
  }
  std::vector<double> ll(n);
  for (std::size_t c = 0; c < n; ++c) ll[c] = detail::stage_loglik(&pooled[c * l], l);
  std::vector<bool> active(n, true);
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);

  std::vector<double> merged(l);
  auto delta = [&](std::size_t a, std::size_t b) {
    for (std::size_t x = 0; x < l; ++x) merged[x] = pooled[a * l + x] + pooled[b * l + x];
    return -2.0 * (detail::stage_loglik(merged.data(), l) - ll[a] - ll[b]) - penalty;
  };

  constexpr double kNone = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kNone);
  std::vector<std::size_t> partner(n, n);
  auto refresh_row = [&](std::size_t a) {
    best[a] = kNone;
    partner[a] = n;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!active[b]) continue;
      const double d = delta(a, b);
      if (d < best[a]) {
        best[a] = d;
        partner[a] = b;
      }
    }
  };
  for (std::size_t a = 0; a < n; ++a) refresh_row(a);

  StagingResult result;
  double score = stratum_bic(counts, label);
  result.trace.push_back(score);
  while (true) {
    std::size_t a = n;
    for (std::size_t r = 0; r < n; ++r)
      if (active[r] && partner[r] < n && (a == n || best[r] < best[a])) a = r;
    if (a == n || !(best[a] < 0.0)) break;
    const std::size_t b = partner[a];
    score += best[a];
    for (std::size_t x = 0; x < l; ++x) pooled[a * l + x] += pooled[b * l + x];
    ll[a] = detail::stage_loglik(&pooled[a * l], l);
    active[b] = false;
    for (auto& lab : label)
      if (lab == static_cast<int>(b)) lab = static_cast<int>(a);
    result.trace.push_back(score);

    refresh_row(a);
    for (std::size_t r = 0; r < n; ++r) {
      if (!active[r] || r == a) continue;
      if (partner[r] == a || partner[r] == b) {
        refresh_row(r);
      } else if (r < a) {
        const double d = delta(r, a);
        if (d < best[r] || (d == best[r] && a < partner[r])) {
          best[r] = d;
          partner[r] = a;
        }
      }
    }
  }
  result.staging = dense_labels(label);
  result.score = stratum_bic(counts, result.staging);
  return result;
}

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

struct KmeansRun {
  std::vector<int> assign;
  double wcss = 0.0;
};

// One k-means++ seeded Lloyd run over n points of dimension d.
inline KmeansRun lloyd(const std::vector<double>& pts, std::size_t n, std::size_t d, std::size_t k,
                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> centers;
  centers.reserve(k * d);
  const std::size_t first = rng.below(n);
  centers.insert(centers.end(), &pts[first * d], &pts[first * d] + d);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = sq_dist(&pts[i * d], &centers[0], d);
  while (centers.size() / d < k) {
    double total = 0.0;
    for (double x : dist) total += x;
    if (total <= 0.0) break;  // every point already coincides with a center
    const std::size_t pick = rng.categorical(dist);
    const std::size_t c = centers.size() / d;
    centers.insert(centers.end(), &pts[pick * d], &pts[pick * d] + d);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sq_dist(&pts[i * d], &centers[c * d], d));
  }
  const std::size_t kk = centers.size() / d;

  KmeansRun run;
  run.assign.assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int nearest = 0;
      double nd = sq_dist(&pts[i * d], &centers[0], d);
      for (std::size_t c = 1; c < kk; ++c) {
        const double dc = sq_dist(&pts[i * d], &centers[c * d], d);
        if (dc < nd) {
          nd = dc;
          nearest = static_cast<int>(c);
        }
      }
      if (run.assign[i] != nearest) {
        run.assign[i] = nearest;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sum(kk * d, 0.0);
    std::vector<std::size_t> size(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(run.assign[i]);
      ++size[c];
      for (std::size_t j = 0; j < d; ++j) sum[c * d + j] += pts[i * d + j];
    }
    for (std::size_t c = 0; c < kk; ++c)
      if (size[c] > 0)
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = sum[c * d + j] / static_cast<double>(size[c]);
  }
  for (std::size_t i = 0; i < n; ++i)
    run.wcss += sq_dist(&pts[i * d], &centers[static_cast<std::size_t>(run.assign[i]) * d], d);
  return run;
}

}  // namespace detail

// k-means over the element-wise square roots of the Laplace-smoothed
// conditional distributions of every context. Clusters become stages; the
// run with the smallest within-cluster sum of squares wins.
inline StagingResult kmeans_stratum(const StratumCounts& counts, int k, int restarts,
                                    std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  const std::size_t n = counts.num_contexts();
  if (n == 0) throw std::invalid_argument("stratum has no contexts");
  const std::size_t l = counts.levels;
  StagingResult result;
  if (static_cast<std::size_t>(k) >= n) {
    std::vector<int> labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    result.staging = labels;
  } else if (k == 1) {
    result.staging.assign(n, 0);
  } else {
    std::vector<double> pts(n * l);
    for (std::size_t c = 0; c < n; ++c) {
      auto row = counts.context(c);
      const double denom = counts.context_total(c) + static_cast<double>(l);
      for (std::size_t x = 0; x < l; ++x) pts[c * l + x] = std::sqrt((row[x] + 1.0) / denom);
    }
    detail::KmeansRun best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
      auto run = detail::lloyd(pts, n, l, static_cast<std::size_t>(k),
                               derive_seed(seed, {static_cast<std::uint64_t>(r)}));
      if (run.wcss < best.wcss) best = std::move(run);
    }
    result.staging = dense_labels(best.assign);
  }
  result.score = stratum_bic(counts, result.staging);
  return result;
}

inline StagingResult learn_stratum(const StratumCounts& counts, const SearchOptions& opts,
                                   std::uint64_t stratum_seed) {
  return opts.method == StagingMethod::Bhc ? bhc_stratum(counts)
                                           : kmeans_stratum(counts, opts.k, opts.restarts, stratum_seed);
}

// Bitmask of a set of data columns.
inline std::uint64_t column_mask(const std::vector<std::size_t>& cols) {
  std::uint64_t m = 0;
  for (auto c : cols) {
    if (c >= 64) throw std::invalid_argument("at most 64 variables supported");
    m |= std::uint64_t{1} << c;
  }
  return m;
}

inline std::vector<std::size_t> mask_columns(std::uint64_t mask) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < 64; ++c)
    if (mask >> c & 1U) cols.push_back(c);
  return cols;
}

// Seed of the k-means run for one (variable, predecessor set) stratum.
inline std::uint64_t stratum_seed(std::uint64_t seed, std::size_t target, std::uint64_t mask) {
  return derive_seed(seed, {static_cast<std::uint64_t>(target), mask});
}

// Staging over predecessors in ascending column order, translated to the
// context enumeration of `preds` (in tree order).
inline std::vector<StageId> reorder_stratum(const std::vector<StageId>& canonical, const Dataset& data,
                                            const std::vector<std::size_t>& preds) {
  std::vector<std::size_t> sorted = preds;
  std::sort(sorted.begin(), sorted.end());
  std::vector<VariableMeta> tree_vars;
  for (auto c : preds) tree_vars.push_back(data.var(c));
  const std::size_t n = context_count(tree_vars, preds.size());
  std::vector<int> out(n);
  for (std::size_t c = 0; c < n; ++c) {
    const Context ctx = decode_context(tree_vars, preds.size(), c);
    std::size_t idx = 0;
    for (auto col : sorted) {
      const auto pos = static_cast<std::size_t>(std::find(preds.begin(), preds.end(), col) - preds.begin());
      idx = idx * data.var(col).size() + static_cast<std::size_t>(ctx[pos]);
    }
    out[c] = canonical.at(idx);
  }
  return dense_labels(out);
}

// Stratum learned for `target` given the predecessor set, in canonical
// (ascending column) context order. Depends only on the set.
inline StagingResult learn_canonical_stratum(const Dataset& data, std::size_t target,
                                             std::vector<std::size_t> preds, const SearchOptions& opts) {
  std::sort(preds.begin(), preds.end());
  const auto counts = count_table(data, target, preds);
  return learn_stratum(counts, opts, stratum_seed(opts.seed, target, column_mask(preds)));
}

inline void check_order(const std::vector<std::size_t>& order, std::size_t p) {
  if (order.size() != p) throw std::invalid_argument("order length differs from variable count");
  std::vector<bool> seen(p, false);
  for (auto v : order) {
    if (v >= p || seen[v]) throw std::invalid_argument("order is not a permutation");
    seen[v] = true;
  }
}

// Assembles a tree with the given order from per-position canonical strata
// and fits its parameters.
inline StagedTree assemble_tree(const Dataset& data, const std::vector<std::size_t>& order,
                                const std::vector<std::vector<StageId>>& canonical,
                                const FitOptions& fit) {
  StagedTree tree;
  tree.order = order;
  for (auto c : order) tree.vars.push_back(data.var(c));
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::vector<std::size_t> preds(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i));
    tree.staging.push_back(reorder_stratum(canonical[i], data, preds));
  }
  return fit_mle(tree, data, fit);
}

struct OrderFit {
  StagedTree tree;
  std::vector<double> stratum_scores;  // per position
  double score = 0.0;                  // sum of stratum_scores
};

// Learns every stratum independently for a fixed order of data columns.
inline OrderFit fit_order_scored(const Dataset& data, const std::vector<std::size_t>& order,
                                 const SearchOptions& opts) {
  opts.check();
  check_order(order, data.num_vars());
  OrderFit fit;
  std::vector<std::vector<StageId>> canonical;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::vector<std::size_t> preds(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i));
    auto res = learn_canonical_stratum(data, order[i], preds, opts);
    fit.stratum_scores.push_back(res.score);
    fit.score += res.score;
    canonical.push_back(std::move(res.staging));
  }
  fit.tree = assemble_tree(data, order, canonical, opts.fit);
  return fit;
}

inline StagedTree fit_order(const Dataset& data, const std::vector<std::size_t>& order,
                            const SearchOptions& opts) {
  return fit_order_scored(data, order, opts).tree;
}

}  // namespace stagecause
