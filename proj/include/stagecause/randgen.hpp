#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stagecause/dataset.hpp"
#include "stagecause/graph.hpp"
#include "stagecause/model.hpp"
#include "stagecause/rng.hpp"

namespace stagecause {

struct GenConfig {
  std::size_t p = 3;       // variables
  std::size_t levels = 2;  // levels per variable
  std::size_t k = 2;       // stages per stratum (capped by the context count)
  std::uint64_t seed = 0;

  void check() const {
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (levels < 2 || levels > kMaxLevels) throw std::invalid_argument("levels must be in [2, 255]");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
  }
};

// Variables X1..Xp with level labels "0".."l-1".
inline std::vector<VariableMeta> default_variables(std::size_t p, std::size_t levels) {
  std::vector<VariableMeta> vars;
  for (std::size_t i = 0; i < p; ++i) {
    VariableMeta v{"X" + std::to_string(i + 1), {}};
    for (std::size_t x = 0; x < levels; ++x) v.levels.push_back(std::to_string(x));
    vars.push_back(std::move(v));
  }
  return vars;
}

// Uniform surjection from n contexts onto m stages, by rejection.
inline std::vector<StageId> random_surjective_staging(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<int> labels(n);
  if (m >= n) {
    for (std::size_t c = 0; c < n; ++c) labels[c] = static_cast<int>(c);
    rng.shuffle(labels);
    return dense_labels(labels);
  }
  while (true) {
    std::vector<bool> used(m, false);
    std::size_t hit = 0;
    for (auto& lab : labels) {
      lab = static_cast<int>(rng.below(m));
      if (!used[static_cast<std::size_t>(lab)]) {
        used[static_cast<std::size_t>(lab)] = true;
        ++hit;
      }
    }
    if (hit == m) return dense_labels(labels);
  }
}

// Random staged tree over `vars` (tree order): every stratum gets exactly
// min(k, #contexts) stages from a uniform surjective assignment, and every
// stage a Dirichlet(1) distribution.
inline StagedTree random_staged_tree(std::vector<VariableMeta> vars, std::size_t k, std::uint64_t seed,
                                     std::vector<std::size_t> order = {}) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  StagedTree t = saturated_tree(std::move(vars), std::move(order));
  Rng rng(seed);
  std::vector<std::vector<ProbVector>> params(t.num_vars());
  for (std::size_t i = 0; i < t.num_vars(); ++i) {
    const std::size_t n = t.num_contexts(i);
    t.staging[i] = random_surjective_staging(n, std::min(k, n), rng);
    for (std::size_t s = 0; s < t.num_stages(i); ++s) params[i].push_back(rng.dirichlet_flat(t.vars[i].size()));
  }
  t.params = std::move(params);
  return t;
}

inline StagedTree random_staged_tree(const GenConfig& cfg) {
  cfg.check();
  return random_staged_tree(default_variables(cfg.p, cfg.levels), cfg.k, cfg.seed);
}

// Number of labeled DAGs on n vertices (Robinson's recurrence).
inline std::uint64_t count_dags(std::size_t n) {
  if (n > 10) throw std::invalid_argument("DAG count overflows beyond 10 vertices");
  std::vector<__int128> a(n + 1, 0);
  a[0] = 1;
  for (std::size_t m = 1; m <= n; ++m) {
    __int128 total = 0;
    __int128 binom = 1;
    for (std::size_t k = 1; k <= m; ++k) {
      binom = binom * static_cast<__int128>(m - k + 1) / static_cast<__int128>(k);
      const __int128 term = binom * (static_cast<__int128>(1) << (k * (m - k))) * a[m - k];
      total += (k % 2 == 1) ? term : -term;
    }
    a[m] = total;
  }
  return static_cast<std::uint64_t>(a[n]);
}

// Every labeled DAG on p vertices, by orienting or omitting each pair.
inline std::vector<Dag> enumerate_dags(std::size_t p) {
  if (p > 5) throw std::invalid_argument("enumeration limited to 5 vertices");
  std::vector<Edge> pairs;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) pairs.emplace_back(a, b);
  std::size_t total = 1;
  for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
  std::vector<Dag> out;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<Edge> edges;
    std::size_t rest = code;
    for (auto [a, b] : pairs) {
      const auto digit = rest % 3;
      rest /= 3;
      if (digit == 1) edges.emplace_back(a, b);
      if (digit == 2) edges.emplace_back(b, a);
    }
    Dag g(p);
    try {
      g = Dag(p, edges);
    } catch (const std::invalid_argument&) {
      continue;
    }
    out.push_back(std::move(g));
  }
  return out;
}

constexpr std::size_t kUniformDagLimit = 6;

inline bool dag_sampler_is_uniform(std::size_t p) { return p <= kUniformDagLimit; }

namespace detail {

// roots[n][k]: labeled DAGs on n vertices with exactly k parentless vertices.
inline std::vector<std::vector<std::uint64_t>> root_counts(std::size_t n_max) {
  std::vector<std::vector<std::uint64_t>> A(n_max + 1, std::vector<std::uint64_t>(n_max + 1, 0));
  std::vector<std::vector<std::uint64_t>> binom(n_max + 1, std::vector<std::uint64_t>(n_max + 1, 0));
  for (std::size_t n = 0; n <= n_max; ++n) {
    binom[n][0] = 1;
    for (std::size_t k = 1; k <= n; ++k) binom[n][k] = binom[n - 1][k - 1] + (k <= n - 1 ? binom[n - 1][k] : 0);
  }
  for (std::size_t n = 1; n <= n_max; ++n) {
    A[n][n] = 1;
    for (std::size_t k = 1; k < n; ++k) {
      std::uint64_t sum = 0;
      for (std::size_t s = 1; s <= n - k; ++s) {
        std::uint64_t w = A[n - k][s];
        for (std::size_t r = 0; r < s; ++r) w *= (std::uint64_t{1} << k) - 1;
        w <<= k * (n - k - s);
        sum += w;
      }
      A[n][k] = binom[n][k] * sum;
    }
  }
  return A;
}

inline std::size_t weighted_pick(const std::vector<std::uint64_t>& w, Rng& rng) {
  std::uint64_t total = 0;
  for (auto x : w) total += x;
  std::uint64_t r = rng.below(total);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (r < w[i]) return i;
    r -= w[i];
  }
  return w.size() - 1;
}

}  // namespace detail

// Uniform over all labeled DAGs for p <= 6: layer sizes are drawn from the
// root-count recursion, edges from each layer to the rest conditioned on
// every vertex of the next layer having a parent in it, then labels are
// permuted uniformly. For larger p, a random order with independent forward
// edges of probability 1/2 (not uniform over DAGs).
inline Dag random_dag_uniform(std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  if (p == 0) return Dag(0);
  std::vector<std::size_t> label(p);
  std::iota(label.begin(), label.end(), std::size_t{0});
  std::vector<Edge> edges;
  if (!dag_sampler_is_uniform(p)) {
    rng.shuffle(label);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b)
        if (rng.below(2) == 1) edges.emplace_back(label[a], label[b]);
    return Dag(p, edges);
  }
  const auto A = detail::root_counts(p);
  std::vector<std::size_t> layers;
  {
    std::vector<std::uint64_t> w(p + 1, 0);
    for (std::size_t k = 1; k <= p; ++k) w[k] = A[p][k];
    layers.push_back(detail::weighted_pick(w, rng));
  }
  for (std::size_t n = p, k = layers.back(); n > k;) {
    std::vector<std::uint64_t> w(n - k + 1, 0);
    for (std::size_t s = 1; s <= n - k; ++s) {
      std::uint64_t x = A[n - k][s];
      for (std::size_t r = 0; r < s; ++r) x *= (std::uint64_t{1} << k) - 1;
      w[s] = x << (k * (n - k - s));
    }
    const std::size_t s = detail::weighted_pick(w, rng);
    layers.push_back(s);
    n -= k;
    k = s;
  }
  std::vector<std::size_t> start{0};
  for (auto sz : layers) start.push_back(start.back() + sz);
  for (std::size_t t = 0; t + 1 < layers.size(); ++t) {
    const std::size_t kt = layers[t];
    for (std::size_t v = start[t + 1]; v < p; ++v) {
      const bool next_layer = v < start[t + 2];
      const std::uint64_t subsets = std::uint64_t{1} << kt;
      const std::uint64_t bits = next_layer ? 1 + rng.below(subsets - 1) : rng.below(subsets);
      for (std::size_t u = 0; u < kt; ++u)
        if (bits >> u & 1U) edges.emplace_back(start[t] + u, v);
    }
  }
  rng.shuffle(label);
  for (auto& [a, b] : edges) {
    a = label[a];
    b = label[b];
  }
  return Dag(p, edges);
}

// Columns permuted at random; perm[c] is the original column of column c.
inline std::pair<Dataset, std::vector<std::size_t>> shuffle_variables(const Dataset& data, std::uint64_t seed) {
  std::vector<std::size_t> perm(data.num_vars());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm);
  return {data.select(perm), perm};
}

}  // namespace stagecause
