#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecause/graph.hpp"
#include "stagecause/model.hpp"
#include "stagecause/probability.hpp"
#include "stagecause/rng.hpp"

namespace stagecause {

// Discrepancy of one target variable of the reference tree.
struct CidVariable {
  std::string name;
  std::size_t contexts = 0;    // |X_[i-1]|
  std::vector<Context> wrong;  // contexts in reference order, lexicographic
  double value = 0.0;          // wrong.size() / contexts
  // Reference-tree positions: I precede the target in both trees, J follow it
  // in the reference tree but precede it in the other one, K = I u J.
  std::vector<std::size_t> I, J, K;
};

struct CidReport {
  std::vector<CidVariable> per_variable;  // reference order
  double total = 0.0;
};

namespace detail {

// Position in `other` of every variable of `ref`, by name; levels must agree.
inline std::vector<std::size_t> position_map(const StagedTree& ref, const StagedTree& other) {
  if (ref.num_vars() != other.num_vars()) throw std::invalid_argument("trees have different variable counts");
  std::vector<std::size_t> pos;
  for (const auto& v : ref.vars) {
    auto q = other.position_of(v.name);
    if (!q) throw std::invalid_argument("variable '" + v.name + "' missing from the second tree");
    if (other.vars[*q].levels != v.levels)
      throw std::invalid_argument("levels of '" + v.name + "' differ between the trees");
    pos.push_back(*q);
  }
  return pos;
}

// Shared bookkeeping for one target: index sets and, for every stage A of
// the other tree at the target's stratum, the set of I-projections of A.
struct TargetSetup {
  std::vector<std::size_t> I, J, K;
  std::size_t codes = 1;                        // prod of |X_j|, j in I
  std::vector<std::size_t> code_of_context;     // reference context -> I code
  std::vector<std::vector<bool>> stage_codes;   // other-tree stage -> codes hit
};

inline TargetSetup setup_target(const StagedTree& ref, const StagedTree& other,
                                const std::vector<std::size_t>& pos, std::size_t i) {
  TargetSetup t;
  const std::size_t p = ref.num_vars();
  for (std::size_t j = 0; j < p; ++j) {
    if (j == i || pos[j] >= pos[i]) continue;
    (j < i ? t.I : t.J).push_back(j);
    t.K.push_back(j);
  }
  for (auto j : t.I) t.codes *= ref.vars[j].size();

  const std::size_t n_ref = ref.num_contexts(i);
  t.code_of_context.resize(n_ref);
  for (std::size_t c = 0; c < n_ref; ++c) {
    const Context x = decode_context(ref.vars, i, c);
    std::size_t code = 0;
    for (auto j : t.I) code = code * ref.vars[j].size() + static_cast<std::size_t>(x[j]);
    t.code_of_context[c] = code;
  }

  const std::size_t depth = pos[i];
  const auto& stratum = other.staging[depth];
  t.stage_codes.assign(stage_count(stratum), std::vector<bool>(t.codes, false));
  for (std::size_t c = 0; c < stratum.size(); ++c) {
    const Context y = decode_context(other.vars, depth, c);
    std::size_t code = 0;
    for (auto j : t.I) code = code * ref.vars[j].size() + static_cast<std::size_t>(y[pos[j]]);
    t.stage_codes[static_cast<std::size_t>(stratum[c])][code] = true;
  }
  return t;
}

inline void finish_variable(CidVariable& var, const StagedTree& ref, std::size_t i,
                            const std::vector<bool>& wrong) {
  var.contexts = wrong.size();
  for (std::size_t c = 0; c < wrong.size(); ++c)
    if (wrong[c]) var.wrong.push_back(decode_context(ref.vars, i, c));
  var.value = static_cast<double>(var.wrong.size()) / static_cast<double>(var.contexts);
}

}  // namespace detail

// Context-specific interventional discrepancy of `other` with respect to the
// reference tree. For every target X_i and every stage A of `other` at X_i's
// stratum, B_A collects the reference contexts whose I-coordinates match some
// member of A; if the reference stages over B_A are not all equal, all of B_A
// is wrongly inferred. The per-variable value is the size of the union of the
// wrong B_A over the number of contexts. Only stagings are used.
inline CidReport cid(const StagedTree& ref, const StagedTree& other) {
  require_valid(ref.without_params());
  require_valid(other.without_params());
  const auto pos = detail::position_map(ref, other);
  CidReport report;
  for (std::size_t i = 0; i < ref.num_vars(); ++i) {
    auto setup = detail::setup_target(ref, other, pos, i);
    const auto& stratum = ref.staging[i];

    // Reference stage shared by all contexts with a given I code, or -1 if mixed.
    constexpr int kUnseen = -2, kMixed = -1;
    std::vector<int> code_stage(setup.codes, kUnseen);
    for (std::size_t c = 0; c < stratum.size(); ++c) {
      int& s = code_stage[setup.code_of_context[c]];
      if (s == kUnseen) s = stratum[c];
      else if (s != stratum[c]) s = kMixed;
    }

    std::vector<bool> wrong_code(setup.codes, false);
    for (const auto& codes : setup.stage_codes) {
      int shared = kUnseen;
      bool uniform = true;
      for (std::size_t code = 0; code < setup.codes && uniform; ++code) {
        if (!codes[code]) continue;
        const int s = code_stage[code];
        if (s == kMixed || (shared != kUnseen && s != shared)) uniform = false;
        shared = s;
      }
      if (!uniform)
        for (std::size_t code = 0; code < setup.codes; ++code)
          if (codes[code]) wrong_code[code] = true;
    }
    std::vector<bool> wrong(stratum.size());
    for (std::size_t c = 0; c < stratum.size(); ++c) wrong[c] = wrong_code[setup.code_of_context[c]];

    CidVariable var;
    var.name = ref.vars[i].name;
    var.I = setup.I;
    var.J = setup.J;
    var.K = setup.K;
    detail::finish_variable(var, ref, i, wrong);
    report.total += var.value;
    report.per_variable.push_back(std::move(var));
  }
  return report;
}

// Numerical witness search for the same wrong sets: draws random parameters
// for the reference staging and compares P(X_i | X_[i-1] = x) against
// P(X_i | X_I in I-projections of A) computed from the joint, for every stage
// A of `other` whose projections cover x. A context is wrong if any draw
// separates the two by more than `tol`.
inline CidReport cid_oracle(const StagedTree& ref, const StagedTree& other, std::size_t draws,
                            std::uint64_t seed, double tol = 1e-7) {
  require_valid(ref.without_params());
  require_valid(other.without_params());
  const auto pos = detail::position_map(ref, other);
  const std::size_t p = ref.num_vars();
  std::vector<detail::TargetSetup> setups;
  for (std::size_t i = 0; i < p; ++i) setups.push_back(detail::setup_target(ref, other, pos, i));
  std::vector<std::vector<bool>> wrong(p);
  for (std::size_t i = 0; i < p; ++i) wrong[i].assign(ref.num_contexts(i), false);

  Rng rng(seed);
  StagedTree model = ref.without_params();
  for (std::size_t d = 0; d < draws; ++d) {
    std::vector<std::vector<ProbVector>> params(p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t s = 0; s < ref.num_stages(i); ++s) params[i].push_back(rng.dirichlet_flat(ref.vars[i].size()));
    model.params = std::move(params);

    std::vector<double> prefix{1.0};  // P(X_[i-1] = x) for depth-i contexts
    for (std::size_t i = 0; i < p; ++i) {
      const auto& setup = setups[i];
      const std::size_t l = ref.vars[i].size();
      const auto& stratum = ref.staging[i];
      for (const auto& codes : setup.stage_codes) {
        ProbVector mix(l, 0.0);
        double mass = 0.0;
        for (std::size_t c = 0; c < stratum.size(); ++c) {
          if (!codes[setup.code_of_context[c]]) continue;
          const auto& theta = (*model.params)[i][static_cast<std::size_t>(stratum[c])];
          for (std::size_t x = 0; x < l; ++x) mix[x] += prefix[c] * theta[x];
          mass += prefix[c];
        }
        for (auto& v : mix) v /= mass;
        for (std::size_t c = 0; c < stratum.size(); ++c) {
          if (!codes[setup.code_of_context[c]] || wrong[i][c]) continue;
          const auto& theta = (*model.params)[i][static_cast<std::size_t>(stratum[c])];
          for (std::size_t x = 0; x < l; ++x)
            if (std::abs(theta[x] - mix[x]) > tol) {
              wrong[i][c] = true;
              break;
            }
        }
      }
      std::vector<double> next(prefix.size() * l);
      for (std::size_t c = 0; c < prefix.size(); ++c) {
        const auto& theta = (*model.params)[i][static_cast<std::size_t>(stratum[c])];
        for (std::size_t x = 0; x < l; ++x) next[c * l + x] = prefix[c] * theta[x];
      }
      prefix = std::move(next);
    }
  }

  CidReport report;
  for (std::size_t i = 0; i < p; ++i) {
    CidVariable var;
    var.name = ref.vars[i].name;
    var.I = setups[i].I;
    var.J = setups[i].J;
    var.K = setups[i].K;
    detail::finish_variable(var, ref, i, wrong[i]);
    report.total += var.value;
    report.per_variable.push_back(std::move(var));
  }
  return report;
}

// Number of discordant pairs between two orderings of the same items.
template <typename T>
std::size_t kendall(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("orderings have different lengths");
  std::vector<std::size_t> rank_in_b(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    auto it = std::find(b.begin(), b.end(), a[k]);
    if (it == b.end()) throw std::invalid_argument("orderings contain different items");
    rank_in_b[k] = static_cast<std::size_t>(it - b.begin());
  }
  {
    auto sorted = rank_in_b;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("ordering repeats an item");
  }
  std::size_t discordant = 0;
  for (std::size_t x = 0; x < rank_in_b.size(); ++x)
    for (std::size_t y = x + 1; y < rank_in_b.size(); ++y)
      if (rank_in_b[x] > rank_in_b[y]) ++discordant;
  return discordant;
}

namespace detail {

using ParentLists = std::vector<std::vector<std::size_t>>;

// x and y d-separated by z, via the moralized ancestral graph.
inline bool d_separated(const ParentLists& parents, std::size_t x, std::size_t y,
                        const std::vector<bool>& z) {
  const std::size_t p = parents.size();
  std::vector<bool> anc(p, false);
  std::vector<std::size_t> stack{x, y};
  for (std::size_t v = 0; v < p; ++v)
    if (z[v]) stack.push_back(v);
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = true;
    for (auto u : parents[v]) stack.push_back(u);
  }
  std::vector<std::vector<bool>> adj(p, std::vector<bool>(p, false));
  for (std::size_t v = 0; v < p; ++v) {
    if (!anc[v]) continue;
    const auto& pa = parents[v];
    for (std::size_t a = 0; a < pa.size(); ++a) {
      adj[v][pa[a]] = adj[pa[a]][v] = true;
      for (std::size_t b = a + 1; b < pa.size(); ++b) adj[pa[a]][pa[b]] = adj[pa[b]][pa[a]] = true;
    }
  }
  std::vector<bool> seen(p, false);
  stack = {x};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (v == y) return false;
    if (seen[v]) continue;
    seen[v] = true;
    for (std::size_t u = 0; u < p; ++u)
      if (adj[v][u] && anc[u] && !z[u] && !seen[u]) stack.push_back(u);
  }
  return true;
}

}  // namespace detail

// Structural intervention distance of `estimate` with respect to `truth`:
// ordered pairs (i, j) whose interventional distribution p(x_j | do(x_i)) is
// wrong when computed by adjusting for the parents of i in `estimate`.
inline std::size_t sid(const Dag& truth, const Dag& estimate) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("graphs have different sizes");
  const std::size_t p = truth.size();
  std::vector<std::vector<bool>> desc(p), anc(p);
  for (std::size_t v = 0; v < p; ++v) {
    desc[v] = truth.descendants(v);
    anc[v] = truth.ancestors(v);
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < p; ++i) {
    const auto& pa = estimate.parents(i);
    std::vector<bool> z(p, false);
    for (auto v : pa) z[v] = true;
    for (std::size_t j = 0; j < p; ++j) {
      if (j == i) continue;
      if (z[j]) {
        // The estimate asserts no effect of i on j.
        if (desc[i][j]) ++count;
        continue;
      }
      // Nodes other than i on a directed path from i to j.
      std::vector<bool> on_path(p, false);
      if (desc[i][j])
        for (std::size_t w = 0; w < p; ++w) on_path[w] = desc[i][w] && (w == j || anc[j][w]);
      bool valid = true;
      for (auto zv : pa)
        for (std::size_t w = 0; w < p && valid; ++w)
          if (on_path[w] && (zv == w || desc[w][zv])) valid = false;
      if (valid) {
        // Proper back-door graph: drop the first edge of every causal path.
        detail::ParentLists parents(p);
        for (std::size_t v = 0; v < p; ++v)
          for (auto u : truth.parents(v))
            if (!(u == i && on_path[v])) parents[v].push_back(u);
        valid = detail::d_separated(parents, i, j, z);
      }
      if (!valid) ++count;
    }
  }
  return count;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

// Ranks with ties sharing their average rank (1-based).
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && x[idx[e + 1]] == x[idx[s]]) ++e;
    const double r = (static_cast<double>(s) + static_cast<double>(e)) / 2.0 + 1.0;
    for (std::size_t k = s; k <= e; ++k) ranks[idx[k]] = r;
    s = e + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

}  // namespace stagecause
