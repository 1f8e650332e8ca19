#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecause/model.hpp"

namespace stagecause {

// Column-labeled categorical observations, stored row-major as level indices.
class Dataset {
 public:
  Dataset(std::vector<VariableMeta> vars, std::vector<std::uint8_t> cells)
      : vars_(std::move(vars)), cells_(std::move(cells)) {
    if (vars_.empty()) throw std::invalid_argument("dataset has no variables");
    for (const auto& v : vars_) check_variable(v);
    if (cells_.empty()) throw std::invalid_argument("no rows");
    if (cells_.size() % vars_.size() != 0)
      throw std::invalid_argument("cell count is not a multiple of the variable count");
    const std::size_t p = vars_.size();
    for (std::size_t k = 0; k < cells_.size(); ++k)
      if (cells_[k] >= vars_[k % p].size())
        throw std::invalid_argument("row " + std::to_string(k / p) + ": level index out of range for '" +
                                    vars_[k % p].name + "'");
  }

  std::size_t num_vars() const { return vars_.size(); }
  std::size_t num_rows() const { return cells_.size() / vars_.size(); }
  const std::vector<VariableMeta>& vars() const { return vars_; }
  const VariableMeta& var(std::size_t j) const { return vars_.at(j); }

  int at(std::size_t row, std::size_t var) const {
    return cells_[row * vars_.size() + var];
  }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {cells_.data() + r * vars_.size(), vars_.size()};
  }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t j = 0; j < vars_.size(); ++j)
      if (vars_[j].name == name) return j;
    return std::nullopt;
  }

  // New dataset whose column c is this dataset's column columns[c].
  Dataset select(const std::vector<std::size_t>& columns) const {
    std::vector<VariableMeta> vars;
    for (auto c : columns) vars.push_back(vars_.at(c));
    std::vector<std::uint8_t> cells;
    cells.reserve(num_rows() * columns.size());
    for (std::size_t r = 0; r < num_rows(); ++r)
      for (auto c : columns) cells.push_back(cells_[r * vars_.size() + c]);
    return Dataset(std::move(vars), std::move(cells));
  }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<VariableMeta> vars_;
  std::vector<std::uint8_t> cells_;
};

// Sufficient statistics for one stratum: a count vector over the levels of
// the target for every context of its predecessors.
struct StratumCounts {
  std::size_t levels = 0;
  std::size_t total = 0;
  std::vector<std::uint32_t> counts;  // context-major, contexts * levels

  std::size_t num_contexts() const { return levels == 0 ? 0 : counts.size() / levels; }
  std::span<const std::uint32_t> context(std::size_t c) const {
    return {counts.data() + c * levels, levels};
  }
  std::uint32_t context_total(std::size_t c) const {
    std::uint32_t n = 0;
    for (auto x : context(c)) n += x;
    return n;
  }
};

// Counts of `target` for every context of `predecessors`, taken in the given
// order (first predecessor = most significant context digit).
inline StratumCounts count_table(const Dataset& data, std::size_t target,
                                 const std::vector<std::size_t>& predecessors) {
  StratumCounts out;
  out.levels = data.var(target).size();
  std::size_t n_ctx = 1;
  for (auto j : predecessors) n_ctx *= data.var(j).size();
  out.counts.assign(n_ctx * out.levels, 0);
  out.total = data.num_rows();
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    std::size_t c = 0;
    for (auto j : predecessors) c = c * data.var(j).size() + static_cast<std::size_t>(data.at(r, j));
    ++out.counts[c * out.levels + static_cast<std::size_t>(data.at(r, target))];
  }
  return out;
}

}  // namespace stagecause
