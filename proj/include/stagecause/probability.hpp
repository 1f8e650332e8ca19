#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "stagecause/dataset.hpp"
#include "stagecause/model.hpp"
#include "stagecause/rng.hpp"

namespace stagecause {

// do(X_I = z_I): tree position -> forced level.
struct Intervention {
  std::map<std::size_t, int> targets;
};

// What to do with a stage that saw no observations when smoothing is 0.
enum class EmptyStage { Error, Uniform };

struct FitOptions {
  double smoothing = 0.0;
  EmptyStage empty_stage = EmptyStage::Error;
};

namespace detail {

// Data column of each tree position, matched by variable name and levels.
inline std::vector<std::size_t> columns_for(const StagedTree& tree, const Dataset& data) {
  std::vector<std::size_t> cols;
  for (const auto& v : tree.vars) {
    auto j = data.index_of(v.name);
    if (!j) throw std::invalid_argument("dataset lacks variable '" + v.name + "'");
    if (data.var(*j).levels != v.levels)
      throw std::invalid_argument("levels of '" + v.name + "' differ between tree and data");
    cols.push_back(*j);
  }
  if (cols.size() != data.num_vars())
    throw std::invalid_argument("dataset has variables not in the tree");
  return cols;
}

inline StratumCounts stratum_counts(const Dataset& data,
                                    const std::vector<std::size_t>& cols, std::size_t depth) {
  std::vector<std::size_t> preds(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(depth));
  return count_table(data, cols[depth], preds);
}

// Pooled counts per stage: stages * levels.
inline std::vector<double> pooled_counts(const StratumCounts& counts,
                                         const std::vector<StageId>& stratum) {
  const std::size_t m = stage_count(stratum);
  std::vector<double> pooled(m * counts.levels, 0.0);
  for (std::size_t c = 0; c < stratum.size(); ++c) {
    auto row = counts.context(c);
    for (std::size_t x = 0; x < counts.levels; ++x)
      pooled[static_cast<std::size_t>(stratum[c]) * counts.levels + x] += row[x];
  }
  return pooled;
}

}  // namespace detail

// Maximum likelihood (optionally additively smoothed) stage vectors; counts of
// all contexts sharing a stage are pooled.
inline StagedTree fit_mle(const StagedTree& structure, const Dataset& data,
                          const FitOptions& opts = {}) {
  if (opts.smoothing < 0.0) throw std::invalid_argument("smoothing must be nonnegative");
  StagedTree tree = structure.without_params();
  require_valid(tree);
  const auto cols = detail::columns_for(tree, data);
  std::vector<std::vector<ProbVector>> params(tree.num_vars());
  for (std::size_t i = 0; i < tree.num_vars(); ++i) {
    const auto counts = detail::stratum_counts(data, cols, i);
    const auto pooled = detail::pooled_counts(counts, tree.staging[i]);
    const std::size_t l = counts.levels;
    for (std::size_t s = 0; s < tree.num_stages(i); ++s) {
      double n = 0.0;
      for (std::size_t x = 0; x < l; ++x) n += pooled[s * l + x];
      ProbVector probs(l);
      const double denom = n + opts.smoothing * static_cast<double>(l);
      if (denom <= 0.0) {
        if (opts.empty_stage == EmptyStage::Error)
          throw std::domain_error("empty stage, smoothing required (depth " + std::to_string(i) +
                                  ", stage " + std::to_string(s) + ")");
        std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(l));
      } else {
        for (std::size_t x = 0; x < l; ++x) probs[x] = (pooled[s * l + x] + opts.smoothing) / denom;
      }
      params[i].push_back(std::move(probs));
    }
  }
  tree.params = std::move(params);
  return tree;
}

// P(X_i | X_[i-1] = ctx): the vector of the context's stage.
inline const ProbVector& conditional(const StagedTree& tree, std::size_t position,
                                     const Context& ctx) {
  require_params(tree);
  if (ctx.size() != position) throw std::invalid_argument("context depth must equal the position");
  return (*tree.params)[position][static_cast<std::size_t>(stage_of(tree, ctx))];
}

// x is a full assignment in tree order.
inline double joint_prob(const StagedTree& tree, const std::vector<int>& x) {
  require_params(tree);
  if (x.size() != tree.num_vars()) throw std::invalid_argument("assignment length mismatch");
  double prob = 1.0;
  std::size_t ctx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto l = tree.vars[i].size();
    if (x[i] < 0 || static_cast<std::size_t>(x[i]) >= l) throw std::out_of_range("level out of range");
    const auto s = static_cast<std::size_t>(tree.staging[i][ctx]);
    prob *= (*tree.params)[i][s][static_cast<std::size_t>(x[i])];
    if (prob == 0.0) return 0.0;
    ctx = ctx * l + static_cast<std::size_t>(x[i]);
  }
  return prob;
}

// Joint distribution over all leaves, indexed by the mixed-radix leaf index.
inline std::vector<double> joint_table(const StagedTree& tree) {
  require_params(tree);
  std::vector<double> table{1.0};
  for (std::size_t i = 0; i < tree.num_vars(); ++i) {
    const auto l = tree.vars[i].size();
    std::vector<double> next(table.size() * l);
    for (std::size_t c = 0; c < table.size(); ++c) {
      const auto& probs = (*tree.params)[i][static_cast<std::size_t>(tree.staging[i][c])];
      for (std::size_t x = 0; x < l; ++x) next[c * l + x] = table[c] * probs[x];
    }
    table = std::move(next);
  }
  return table;
}

// P(X_i | do(X_I = z_I)) with I a subset of the positions before i.
// Truncated factorization: non-intervened predecessors keep their mechanisms,
// intervened ones are pinned to their level.
inline ProbVector interventional(const StagedTree& tree, std::size_t position,
                                 const Intervention& intervention) {
  require_params(tree);
  if (position >= tree.num_vars()) throw std::out_of_range("target position out of range");
  for (auto [j, level] : intervention.targets) {
    if (j == position) throw std::invalid_argument("target inside intervention set");
    if (j > position) throw std::invalid_argument("intervention on a downstream variable");
    if (level < 0 || static_cast<std::size_t>(level) >= tree.vars[j].size())
      throw std::out_of_range("intervention level out of range");
  }
  // Forward pass over strata carrying the interventional weight of each prefix.
  std::vector<double> weight{1.0};
  for (std::size_t j = 0; j < position; ++j) {
    const auto l = tree.vars[j].size();
    std::vector<double> next(weight.size() * l, 0.0);
    auto forced = intervention.targets.find(j);
    for (std::size_t c = 0; c < weight.size(); ++c) {
      if (weight[c] == 0.0) continue;
      if (forced != intervention.targets.end()) {
        next[c * l + static_cast<std::size_t>(forced->second)] = weight[c];
        continue;
      }
      const auto& probs = (*tree.params)[j][static_cast<std::size_t>(tree.staging[j][c])];
      for (std::size_t x = 0; x < l; ++x) next[c * l + x] = weight[c] * probs[x];
    }
    weight = std::move(next);
  }
  const auto l = tree.vars[position].size();
  ProbVector out(l, 0.0);
  for (std::size_t c = 0; c < weight.size(); ++c) {
    if (weight[c] == 0.0) continue;
    const auto& probs = (*tree.params)[position][static_cast<std::size_t>(tree.staging[position][c])];
    for (std::size_t x = 0; x < l; ++x) out[x] += weight[c] * probs[x];
  }
  return out;
}

struct LogLikelihood {
  double value = 0.0;
  std::vector<double> per_depth;
  // Observed cells whose model probability is 0; value is -inf when nonzero.
  std::size_t impossible_cells = 0;

  bool finite() const { return impossible_cells == 0; }
};

inline LogLikelihood log_likelihood(const StagedTree& tree, const Dataset& data) {
  require_params(tree);
  const auto cols = detail::columns_for(tree, data);
  LogLikelihood ll;
  for (std::size_t i = 0; i < tree.num_vars(); ++i) {
    const auto counts = detail::stratum_counts(data, cols, i);
    double depth_ll = 0.0;
    for (std::size_t c = 0; c < counts.num_contexts(); ++c) {
      const auto& probs = (*tree.params)[i][static_cast<std::size_t>(tree.staging[i][c])];
      auto row = counts.context(c);
      for (std::size_t x = 0; x < counts.levels; ++x) {
        if (row[x] == 0) continue;
        if (probs[x] <= 0.0) {
          ++ll.impossible_cells;
          continue;
        }
        depth_ll += row[x] * std::log(probs[x]);
      }
    }
    ll.per_depth.push_back(depth_ll);
    ll.value += depth_ll;
  }
  if (!ll.finite()) ll.value = -std::numeric_limits<double>::infinity();
  return ll;
}

// -2 logL + df log N; lower is better. +inf when an observation is impossible.
inline double bic(const StagedTree& tree, const Dataset& data) {
  const auto ll = log_likelihood(tree, data);
  if (!ll.finite()) return std::numeric_limits<double>::infinity();
  return -2.0 * ll.value +
         static_cast<double>(tree.degrees_of_freedom()) * std::log(static_cast<double>(data.num_rows()));
}

// Forward sampling. Column order[i] of the result holds vars[i].
inline Dataset sample(const StagedTree& tree, std::size_t n, std::uint64_t seed) {
  require_params(tree);
  require_valid(tree);
  const std::size_t p = tree.num_vars();
  std::vector<VariableMeta> vars(p);
  for (std::size_t i = 0; i < p; ++i) vars[tree.order[i]] = tree.vars[i];
  std::vector<std::uint8_t> cells(n * p);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t ctx = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const auto& probs = (*tree.params)[i][static_cast<std::size_t>(tree.staging[i][ctx])];
      const auto x = rng.categorical(probs);
      cells[r * p + tree.order[i]] = static_cast<std::uint8_t>(x);
      ctx = ctx * tree.vars[i].size() + x;
    }
  }
  return Dataset(std::move(vars), std::move(cells));
}

}  // namespace stagecause
