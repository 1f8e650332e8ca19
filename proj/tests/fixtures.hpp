#pragma once

// Shared fixtures and brute-force oracles for the test suites. The oracles
// deliberately avoid the library's own evaluation paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "stagecause/stagecause.hpp"

namespace stagecause::testing {

inline VariableMeta binary(const std::string& name) { return {name, {"0", "1"}}; }

// Three binary variables in order (X1, X2, X3): X2 independent of X1, and
// X3 independent of X2 only in the context X1 = 0.
inline StagedTree csi_tree(bool with_params = true) {
  StagedTree t;
  t.order = {0, 1, 2};
  t.vars = {binary("X1"), binary("X2"), binary("X3")};
  t.staging = {{0}, {0, 0}, {0, 0, 1, 2}};
  if (with_params)
    t.params = std::vector<std::vector<ProbVector>>{
        {{0.5, 0.5}}, {{0.3, 0.7}}, {{0.2, 0.8}, {0.6, 0.4}, {0.9, 0.1}}};
  return t;
}

// Same variables in order (X1, X3, X2); X2's contexts (0,0),(1,1) and
// (0,1),(1,0) share stages.
inline StagedTree swapped_tree() {
  StagedTree t;
  t.order = {0, 2, 1};
  t.vars = {binary("X1"), binary("X3"), binary("X2")};
  t.staging = {{0}, {0, 1}, {0, 1, 1, 0}};
  return t;
}

// Bivariate tree in order (X2, X1) with X2 ternary; X1's distribution is the
// same for X2 = 2 and X2 = 3.
inline StagedTree bivariate_truth() {
  StagedTree t;
  t.order = {0, 1};
  t.vars = {{"X2", {"1", "2", "3"}}, binary("X1")};
  t.staging = {{0}, {0, 1, 1}};
  t.params = std::vector<std::vector<ProbVector>>{{{0.35, 0.35, 0.3}}, {{0.8, 0.2}, {0.3, 0.7}}};
  return t;
}

// Every full assignment in tree order.
inline std::vector<std::vector<int>> all_assignments(const StagedTree& t) {
  std::vector<std::vector<int>> out;
  const std::size_t n = t.num_contexts(t.num_vars());
  for (std::size_t c = 0; c < n; ++c) out.push_back(decode_context(t.vars, t.num_vars(), c));
  return out;
}

// Stage vector looked up directly from the staging table.
inline const ProbVector& stage_vector(const StagedTree& t, std::size_t i, const std::vector<int>& x) {
  std::size_t c = 0;
  for (std::size_t j = 0; j < i; ++j) c = c * t.vars[j].size() + static_cast<std::size_t>(x[j]);
  return (*t.params)[i][static_cast<std::size_t>(t.staging[i][c])];
}

inline double brute_joint(const StagedTree& t, const std::vector<int>& x) {
  double prob = 1.0;
  for (std::size_t i = 0; i < t.num_vars(); ++i) prob *= stage_vector(t, i, x)[static_cast<std::size_t>(x[i])];
  return prob;
}

// Interventional marginal of X_i from the full joint: keep assignments
// agreeing with the intervention, divide out the intervened factors, sum.
inline ProbVector brute_interventional(const StagedTree& t, std::size_t i, const Intervention& iv) {
  ProbVector out(t.vars[i].size(), 0.0);
  for (const auto& x : all_assignments(t)) {
    bool agrees = true;
    double divisor = 1.0;
    for (auto [j, z] : iv.targets) {
      if (x[j] != z) agrees = false;
      else divisor *= stage_vector(t, j, x)[static_cast<std::size_t>(z)];
    }
    if (!agrees || divisor == 0.0) continue;
    out[static_cast<std::size_t>(x[i])] += brute_joint(t, x) / divisor;
  }
  return out;
}

// Interventional distributions of a binary DAG model, by truncated
// factorization over all assignments. cpt[v][parent-config] = P(X_v = 1).
struct BinaryDagModel {
  Dag g;
  std::vector<std::vector<double>> cpt;

  double prob(const std::vector<int>& x, int forced = -1) const {
    double pr = 1.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (static_cast<int>(v) == forced) continue;
      std::size_t cfg = 0;
      for (auto u : g.parents(v)) cfg = cfg * 2 + static_cast<std::size_t>(x[u]);
      const double p1 = cpt[v][cfg];
      pr *= x[v] ? p1 : 1.0 - p1;
    }
    return pr;
  }

  std::vector<std::vector<int>> assignments() const {
    std::vector<std::vector<int>> out;
    for (std::size_t code = 0; code < (std::size_t{1} << g.size()); ++code) {
      std::vector<int> x(g.size());
      for (std::size_t v = 0; v < g.size(); ++v) x[v] = static_cast<int>(code >> v & 1U);
      out.push_back(x);
    }
    return out;
  }

  // P(X_j = 1 | do(X_i = xi)).
  double do_effect(std::size_t i, int xi, std::size_t j) const {
    double num = 0.0, den = 0.0;
    for (auto x : assignments()) {
      if (x[i] != xi) continue;
      const double pr = prob(x, static_cast<int>(i));
      den += pr;
      if (x[j] == 1) num += pr;
    }
    return num / den;
  }

  // Sum over z of P(X_j = 1 | X_i = xi, Z = z) P(Z = z), Z a vertex set.
  double adjusted(std::size_t i, int xi, std::size_t j, const std::vector<std::size_t>& z) const {
    std::map<std::vector<int>, double> pz, pjxz, pxz;
    for (auto x : assignments()) {
      std::vector<int> key;
      for (auto v : z) key.push_back(x[v]);
      const double pr = prob(x);
      pz[key] += pr;
      if (x[i] == xi) {
        pxz[key] += pr;
        if (x[j] == 1) pjxz[key] += pr;
      }
    }
    double total = 0.0;
    for (auto& [key, w] : pz) total += w * pjxz[key] / pxz[key];
    return total;
  }

  double marginal(std::size_t j) const {
    double total = 0.0;
    for (auto x : assignments())
      if (x[j] == 1) total += prob(x);
    return total;
  }
};

inline BinaryDagModel random_binary_model(const Dag& g, Rng& rng) {
  BinaryDagModel m{g, {}};
  for (std::size_t v = 0; v < g.size(); ++v) {
    std::vector<double> rows;
    for (std::size_t c = 0; c < (std::size_t{1} << g.parents(v).size()); ++c) rows.push_back(0.05 + 0.9 * rng.uniform());
    m.cpt.push_back(rows);
  }
  return m;
}

// SID by numerical comparison of the parent-adjustment estimate against the
// true interventional distribution over a few random parameterizations.
inline std::size_t brute_sid(const Dag& truth, const Dag& estimate, std::uint64_t seed, int draws = 3) {
  Rng rng(seed);
  std::vector<BinaryDagModel> models;
  for (int d = 0; d < draws; ++d) models.push_back(random_binary_model(truth, rng));
  std::size_t count = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (i == j) continue;
      const auto& pa = estimate.parents(i);
      const bool j_is_parent = std::find(pa.begin(), pa.end(), j) != pa.end();
      bool wrong = false;
      for (const auto& m : models)
        for (int xi = 0; xi < 2; ++xi) {
          const double truth_value = m.do_effect(i, xi, j);
          const double est = j_is_parent ? m.marginal(j) : m.adjusted(i, xi, j, pa);
          if (std::abs(truth_value - est) > 1e-9) wrong = true;
        }
      if (wrong) ++count;
    }
  return count;
}

inline Dataset make_dataset(std::vector<VariableMeta> vars, const std::vector<std::vector<int>>& rows) {
  std::vector<std::uint8_t> cells;
  for (const auto& r : rows)
    for (int x : r) cells.push_back(static_cast<std::uint8_t>(x));
  return Dataset(std::move(vars), std::move(cells));
}

// Random valid tree over p variables with random levels (2..max_levels),
// random order and random staging, no parameters.
inline StagedTree random_structure(std::size_t p, std::size_t max_levels, std::uint64_t seed,
                                   const std::vector<VariableMeta>* fixed_vars = nullptr) {
  Rng rng(seed);
  std::vector<VariableMeta> vars;
  if (fixed_vars) {
    vars = *fixed_vars;
  } else {
    for (std::size_t i = 0; i < p; ++i) {
      VariableMeta v{"V" + std::to_string(i), {}};
      const std::size_t l = 2 + rng.below(max_levels - 1);
      for (std::size_t x = 0; x < l; ++x) v.levels.push_back("l" + std::to_string(x));
      vars.push_back(v);
    }
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<VariableMeta> ordered;
  for (auto v : order) ordered.push_back(vars[v]);
  StagedTree t = saturated_tree(ordered, order);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t n = t.num_contexts(i);
    const std::size_t m = 1 + rng.below(n);
    std::vector<int> labels(n);
    for (auto& lab : labels) lab = static_cast<int>(rng.below(m));
    t.staging[i] = dense_labels(labels);
  }
  return t;
}

}  // namespace stagecause::testing
