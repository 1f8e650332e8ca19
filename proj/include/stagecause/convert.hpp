#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "stagecause/graph.hpp"
#include "stagecause/model.hpp"

namespace stagecause {

// Staged tree of a DAG model: with variables in a topological order, the
// contexts of X_i share a stage iff they agree on the parents of X_i.
// `vars[v]` describes DAG vertex v.
inline StagedTree dag_to_staged_tree(const Dag& g, const std::vector<std::size_t>& order,
                                     const std::vector<VariableMeta>& vars) {
  if (vars.size() != g.size()) throw std::invalid_argument("need one VariableMeta per vertex");
  if (!g.is_topological(order)) throw std::invalid_argument("order is not topological for the graph");
  StagedTree t;
  t.order = order;
  for (auto v : order) t.vars.push_back(vars[v]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::vector<std::size_t> parent_positions;
    for (std::size_t j = 0; j < i; ++j)
      if (g.has_edge(order[j], order[i])) parent_positions.push_back(j);
    const std::size_t n = t.num_contexts(i);
    std::vector<int> labels(n);
    for (std::size_t c = 0; c < n; ++c) {
      const Context ctx = decode_context(t.vars, i, c);
      int code = 0;
      for (auto j : parent_positions) code = code * static_cast<int>(t.vars[j].size()) + ctx[j];
      labels[c] = code;
    }
    t.staging.push_back(dense_labels(labels));
  }
  return t;
}

inline StagedTree dag_to_staged_tree(const Dag& g, const std::vector<VariableMeta>& vars) {
  return dag_to_staged_tree(g, g.topological_order(), vars);
}

// DAG over the tree's variable indices (tree.order): edge order[j] -> order[i]
// iff two depth-i contexts that differ only in coordinate j lie in different
// stages.
inline Dag staged_tree_to_minimal_dag(const StagedTree& t) {
  require_valid(t.without_params());
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < t.num_vars(); ++i) {
    const auto& stratum = t.staging[i];
    for (std::size_t j = 0; j < i; ++j) {
      // Stride of coordinate j in the mixed-radix context index.
      std::size_t stride = 1;
      for (std::size_t q = j + 1; q < i; ++q) stride *= t.vars[q].size();
      const std::size_t lj = t.vars[j].size();
      bool depends = false;
      for (std::size_t c = 0; c < stratum.size() && !depends; ++c) {
        const std::size_t digit = (c / stride) % lj;
        if (digit != 0) continue;
        for (std::size_t x = 1; x < lj; ++x)
          if (stratum[c + x * stride] != stratum[c]) {
            depends = true;
            break;
          }
      }
      if (depends) edges.emplace_back(t.order[j], t.order[i]);
    }
  }
  return Dag(t.num_vars(), edges);
}

// Pairs adjacent in every input graph: directed when every graph orients them
// the same way, undirected otherwise. Pairs missing from any graph are left out.
inline Pdag consensus_pdag(const std::vector<Dag>& dags) {
  if (dags.empty()) throw std::invalid_argument("consensus needs at least one graph");
  const std::size_t p = dags.front().size();
  for (const auto& g : dags)
    if (g.size() != p) throw std::invalid_argument("graphs have different sizes");
  Pdag out;
  out.p = p;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      bool all_adjacent = true, all_forward = true, all_backward = true;
      for (const auto& g : dags) {
        all_adjacent = all_adjacent && g.adjacent(a, b);
        all_forward = all_forward && g.has_edge(a, b);
        all_backward = all_backward && g.has_edge(b, a);
      }
      if (!all_adjacent) continue;
      if (all_forward) out.add_directed(a, b);
      else if (all_backward) out.add_directed(b, a);
      else out.add_undirected(a, b);
    }
  return out;
}

}  // namespace stagecause
