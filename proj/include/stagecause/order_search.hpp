#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stagecause/dataset.hpp"
#include "stagecause/parallel.hpp"
#include "stagecause/staging_search.hpp"

namespace stagecause {

// Stratum scores are rounded to multiples of 2^-20 before they are summed,
// so that every sum of them is exact and independent of summation order.
inline double quantize_score(double x) {
  constexpr double kScale = 1048576.0;
  return std::round(x * kScale) / kScale;
}

struct CachedStratum {
  double score = 0.0;             // quantized stratum BIC
  std::vector<StageId> staging;   // canonical context order
};

// Memo of stratum results for one dataset and search configuration, keyed by
// (target column, predecessor set). Write-once: concurrent misses on one key
// compute the same value and the first insertion wins.
class ScoreCache {
 public:
  ScoreCache(const Dataset& data, SearchOptions opts) : data_(data), opts_(std::move(opts)) {
    opts_.check();
    if (data.num_vars() > 64) throw std::invalid_argument("at most 64 variables supported");
  }

  const Dataset& data() const { return data_; }
  const SearchOptions& options() const { return opts_; }

  const CachedStratum& get(std::size_t target, std::uint64_t mask) {
    if (target >= data_.num_vars()) throw std::out_of_range("target column out of range");
    if (mask >> target & 1U) throw std::invalid_argument("variable inside its own predecessor set");
    const Key key{target, mask};
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto res = learn_canonical_stratum(data_, target, mask_columns(mask), opts_);
    evaluations_.fetch_add(1);
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, CachedStratum{quantize_score(res.score), std::move(res.staging)});
    return it->second;
  }

  // Number of stratum computations performed (misses, including benign races).
  std::size_t evaluations() const { return evaluations_.load(); }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  using Key = std::pair<std::size_t, std::uint64_t>;
  const Dataset& data_;
  SearchOptions opts_;
  mutable std::mutex mutex_;
  std::map<Key, CachedStratum> entries_;  // node-based: references stay valid
  std::atomic<std::size_t> evaluations_{0};
};

inline const CachedStratum& stratum_score(ScoreCache& cache, std::size_t target,
                                          const std::vector<std::size_t>& predecessors) {
  return cache.get(target, column_mask(predecessors));
}

struct DiscoveryResult {
  std::vector<std::size_t> order;       // data columns, first to last
  StagedTree tree;
  double score = 0.0;                   // sum of quantized stratum scores along order
  std::vector<double> stratum_scores;   // per position of order
  // Exhaustive mode only: every order with its score, and the minimizers.
  std::vector<std::pair<std::vector<std::size_t>, double>> all_orders;
  std::vector<std::vector<std::size_t>> tied_orders;
  std::size_t evaluations = 0;
};

namespace detail {

inline DiscoveryResult finish(ScoreCache& cache, std::vector<std::size_t> order) {
  DiscoveryResult res;
  std::vector<std::vector<StageId>> canonical;
  std::uint64_t mask = 0;
  for (auto v : order) {
    const auto& entry = cache.get(v, mask);
    res.stratum_scores.push_back(entry.score);
    res.score += entry.score;
    canonical.push_back(entry.staging);
    mask |= std::uint64_t{1} << v;
  }
  res.tree = assemble_tree(cache.data(), order, canonical, cache.options().fit);
  res.order = std::move(order);
  return res;
}

}  // namespace detail

constexpr std::size_t kDefaultDpLimit = 20;

// Exact order search: best(S) = min over i in S of best(S \ i) + s(i, S \ i).
// Ties go to the smallest variable index at each step.
inline DiscoveryResult best_order_dp(ScoreCache& cache, std::size_t threads = 1,
                                     std::size_t limit = kDefaultDpLimit) {
  const std::size_t p = cache.data().num_vars();
  if (p > limit) throw std::invalid_argument("too many variables for order search (" + std::to_string(p) + ")");
  const std::uint64_t full = (std::uint64_t{1} << p) - 1;

  // Every (variable, predecessor set) stratum, computed up front.
  std::vector<std::pair<std::size_t, std::uint64_t>> keys;
  for (std::size_t v = 0; v < p; ++v)
    for (std::uint64_t s = 0; s <= full; ++s)
      if (!(s >> v & 1U)) keys.emplace_back(v, s);
  parallel_for(keys.size(), threads, [&](std::size_t k) { cache.get(keys[k].first, keys[k].second); });

  std::vector<double> best(full + 1, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> last(full + 1, p);
  best[0] = 0.0;
  for (std::uint64_t s = 1; s <= full; ++s) {
    for (std::size_t v = 0; v < p; ++v) {
      if (!(s >> v & 1U)) continue;
      const std::uint64_t rest = s & ~(std::uint64_t{1} << v);
      const double value = best[rest] + cache.get(v, rest).score;
      if (value < best[s]) {
        best[s] = value;
        last[s] = v;
      }
    }
  }
  std::vector<std::size_t> order(p);
  std::uint64_t s = full;
  for (std::size_t i = p; i-- > 0;) {
    order[i] = last[s];
    s &= ~(std::uint64_t{1} << last[s]);
  }
  auto res = detail::finish(cache, std::move(order));
  res.evaluations = cache.evaluations();
  return res;
}

constexpr std::size_t kExhaustiveLimit = 7;

// Scores all p! orders; reports every score and all minimizers.
inline DiscoveryResult best_order_exhaustive(ScoreCache& cache, std::size_t threads = 1) {
  const std::size_t p = cache.data().num_vars();
  if (p > kExhaustiveLimit) throw std::invalid_argument("too many variables for exhaustive search");
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> orders;
  do {
    orders.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<double> scores(orders.size());
  parallel_for(orders.size(), threads, [&](std::size_t k) {
    double total = 0.0;
    std::uint64_t mask = 0;
    for (auto v : orders[k]) {
      total += cache.get(v, mask).score;
      mask |= std::uint64_t{1} << v;
    }
    scores[k] = total;
  });
  const double min_score = *std::min_element(scores.begin(), scores.end());
  std::vector<std::vector<std::size_t>> tied;
  std::vector<std::pair<std::vector<std::size_t>, double>> all;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    if (scores[k] == min_score) tied.push_back(orders[k]);
    all.emplace_back(orders[k], scores[k]);
  }
  auto res = detail::finish(cache, tied.front());
  res.all_orders = std::move(all);
  res.tied_orders = std::move(tied);
  res.evaluations = cache.evaluations();
  return res;
}

inline DiscoveryResult best_order_dp(const Dataset& data, const SearchOptions& opts, std::size_t threads = 1) {
  ScoreCache cache(data, opts);
  return best_order_dp(cache, threads);
}

inline DiscoveryResult best_order_exhaustive(const Dataset& data, const SearchOptions& opts,
                                             std::size_t threads = 1) {
  ScoreCache cache(data, opts);
  return best_order_exhaustive(cache, threads);
}

}  // namespace stagecause
