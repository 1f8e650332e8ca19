#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stagecause {

// A categorical variable: a name and its ordered level labels.
struct VariableMeta {
  std::string name;
  std::vector<std::string> levels;

  std::size_t size() const { return levels.size(); }
  bool operator==(const VariableMeta&) const = default;
};

// Level indices for the first d variables of some order. A vertex of the
// tree at depth d is identified with its context; the root is the empty one.
using Context = std::vector<int>;
using StageId = int;
using ProbVector = std::vector<double>;

constexpr std::size_t kMaxLevels = 255;

inline void check_variable(const VariableMeta& v) {
  if (v.levels.size() < 2)
    throw std::invalid_argument("variable '" + v.name + "' needs at least 2 levels");
  if (v.levels.size() > kMaxLevels)
    throw std::invalid_argument("variable '" + v.name + "' has too many levels");
  std::unordered_set<std::string> seen;
  for (const auto& l : v.levels)
    if (!seen.insert(l).second)
      throw std::invalid_argument("variable '" + v.name + "' repeats level '" + l + "'");
}

// Number of contexts over the first `depth` variables of `vars`.
inline std::size_t context_count(const std::vector<VariableMeta>& vars, std::size_t depth) {
  std::size_t n = 1;
  for (std::size_t j = 0; j < depth; ++j) n *= vars[j].size();
  return n;
}

// Mixed-radix encoding, most significant digit = first variable.
inline std::size_t encode_context(const std::vector<VariableMeta>& vars, const Context& ctx) {
  if (ctx.size() > vars.size()) throw std::out_of_range("context deeper than the tree");
  std::size_t idx = 0;
  for (std::size_t j = 0; j < ctx.size(); ++j) {
    if (ctx[j] < 0 || static_cast<std::size_t>(ctx[j]) >= vars[j].size())
      throw std::out_of_range("context level out of range for '" + vars[j].name + "'");
    idx = idx * vars[j].size() + static_cast<std::size_t>(ctx[j]);
  }
  return idx;
}

inline Context decode_context(const std::vector<VariableMeta>& vars, std::size_t depth,
                              std::size_t index) {
  Context ctx(depth);
  for (std::size_t j = depth; j-- > 0;) {
    ctx[j] = static_cast<int>(index % vars[j].size());
    index /= vars[j].size();
  }
  return ctx;
}

// Relabels arbitrary labels to 0..m-1 in order of first appearance.
inline std::vector<StageId> dense_labels(const std::vector<int>& labels) {
  std::unordered_map<int, StageId> remap;
  std::vector<StageId> out(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto [it, inserted] = remap.try_emplace(labels[c], static_cast<StageId>(remap.size()));
    out[c] = it->second;
  }
  return out;
}

inline std::size_t stage_count(const std::vector<StageId>& stratum) {
  if (stratum.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(stratum.begin(), stratum.end())) + 1;
}

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// A stratified, X-compatible staged tree stored stratum by stratum.
//
// `order[i]` is the index of the variable at depth i in some external index
// space (dataset columns, DAG vertices). `staging[i][c]` is the stage of the
// depth-i context with mixed-radix index c; the stage's outgoing edges carry
// the distribution of vars[i]. `params[i][s]` is the distribution of stage s.
struct StagedTree {
  std::vector<std::size_t> order;
  std::vector<VariableMeta> vars;
  std::vector<std::vector<StageId>> staging;
  std::optional<std::vector<std::vector<ProbVector>>> params;

  std::size_t num_vars() const { return vars.size(); }
  std::size_t num_contexts(std::size_t depth) const { return context_count(vars, depth); }
  std::size_t num_stages(std::size_t depth) const { return stage_count(staging.at(depth)); }
  bool has_params() const { return params.has_value(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& v : vars) out.push_back(v.name);
    return out;
  }

  std::optional<std::size_t> position_of(const std::string& name) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == name) return i;
    return std::nullopt;
  }

  // Free simplex parameters: sum over strata of stages * (levels - 1).
  std::size_t degrees_of_freedom() const {
    std::size_t df = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) df += num_stages(i) * (vars[i].size() - 1);
    return df;
  }

  // All stage vectors strictly inside the simplex.
  bool is_interior() const {
    if (!params) return false;
    for (const auto& stratum : *params)
      for (const auto& probs : stratum)
        for (double x : probs)
          if (!(x > 0.0 && x < 1.0)) return false;
    return true;
  }

  StagedTree without_params() const {
    StagedTree t = *this;
    t.params.reset();
    return t;
  }
};

inline ValidationReport validate_tree(const StagedTree& tree) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const std::size_t p = tree.vars.size();

  if (tree.order.size() != p) fail("order length differs from variable count");
  {
    std::vector<std::size_t> sorted = tree.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i) {
        fail("order is not a permutation");
        break;
      }
  }
  std::unordered_set<std::string> names;
  for (const auto& v : tree.vars) {
    if (!names.insert(v.name).second) fail("duplicate variable name '" + v.name + "'");
    try {
      check_variable(v);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (!report.ok()) return report;

  if (tree.staging.size() != p) {
    fail("staging has " + std::to_string(tree.staging.size()) + " strata, expected " +
         std::to_string(p));
    return report;
  }
  for (std::size_t i = 0; i < p; ++i) {
    const auto& stratum = tree.staging[i];
    const std::size_t expected = tree.num_contexts(i);
    if (stratum.size() != expected) {
      fail("staging not total at depth " + std::to_string(i) + ": " +
           std::to_string(stratum.size()) + " of " + std::to_string(expected) + " contexts");
      continue;
    }
    std::vector<bool> used(stratum.size(), false);
    bool bad_id = false;
    for (StageId s : stratum) {
      if (s < 0 || static_cast<std::size_t>(s) >= stratum.size()) {
        bad_id = true;
        continue;
      }
      used[static_cast<std::size_t>(s)] = true;
    }
    const std::size_t m = stage_count(stratum);
    if (bad_id || std::any_of(used.begin(), used.begin() + static_cast<std::ptrdiff_t>(m),
                              [](bool u) { return !u; }))
      fail("stage ids at depth " + std::to_string(i) + " are not dense");
  }
  if (!report.ok() || !tree.params) return report;

  const auto& params = *tree.params;
  if (params.size() != p) {
    fail("params cover " + std::to_string(params.size()) + " strata, expected " +
         std::to_string(p));
    return report;
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (params[i].size() != tree.num_stages(i)) {
      fail("params at depth " + std::to_string(i) + " do not match the stage count");
      continue;
    }
    for (std::size_t s = 0; s < params[i].size(); ++s) {
      const auto& probs = params[i][s];
      const std::string where = " at depth " + std::to_string(i) + " stage " + std::to_string(s);
      if (probs.size() != tree.vars[i].size()) {
        fail("stage vector length mismatch" + where);
        continue;
      }
      double sum = 0.0;
      bool in_range = true;
      for (double x : probs) {
        sum += x;
        if (!(x >= 0.0 && x <= 1.0)) in_range = false;
      }
      if (!in_range) fail("simplex entry outside [0,1]" + where);
      if (std::abs(sum - 1.0) > 1e-9) fail("simplex sum != 1" + where);
    }
  }
  return report;
}

inline void require_valid(const StagedTree& tree) {
  auto report = validate_tree(tree);
  if (!report.ok()) throw std::invalid_argument("invalid staged tree: " + report.violations[0]);
}

inline void require_params(const StagedTree& tree) {
  if (!tree.params) throw std::logic_error("staged tree has no parameters");
}

// All contexts of the given depth in lexicographic order.
inline std::vector<Context> contexts(const StagedTree& tree, std::size_t depth) {
  if (depth > tree.num_vars()) throw std::out_of_range("depth exceeds variable count");
  const std::size_t n = tree.num_contexts(depth);
  std::vector<Context> out;
  out.reserve(n);
  for (std::size_t c = 0; c < n; ++c) out.push_back(decode_context(tree.vars, depth, c));
  return out;
}

inline StageId stage_of(const StagedTree& tree, const Context& ctx) {
  if (ctx.size() >= tree.num_vars()) throw std::out_of_range("context depth must be below p");
  return tree.staging[ctx.size()].at(encode_context(tree.vars, ctx));
}

// Tree over `vars` (in tree order) where every context is its own stage.
inline StagedTree saturated_tree(std::vector<VariableMeta> vars, std::vector<std::size_t> order = {}) {
  StagedTree t;
  if (order.empty()) {
    order.resize(vars.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  t.order = std::move(order);
  t.vars = std::move(vars);
  for (std::size_t i = 0; i < t.vars.size(); ++i) {
    std::vector<StageId> stratum(t.num_contexts(i));
    std::iota(stratum.begin(), stratum.end(), 0);
    t.staging.push_back(std::move(stratum));
  }
  return t;
}

// Tree where every stratum is a single stage (full independence).
inline StagedTree independence_tree(std::vector<VariableMeta> vars,
                                    std::vector<std::size_t> order = {}) {
  StagedTree t = saturated_tree(std::move(vars), std::move(order));
  for (auto& stratum : t.staging) std::fill(stratum.begin(), stratum.end(), 0);
  return t;
}

}  // namespace stagecause
