#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "stagecause/convert.hpp"
#include "stagecause/io.hpp"
#include "stagecause/metrics.hpp"
#include "stagecause/order_search.hpp"
#include "stagecause/parallel.hpp"
#include "stagecause/probability.hpp"
#include "stagecause/randgen.hpp"

namespace stagecause {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::vector<std::size_t> ps{2, 3, 4, 5};
  std::vector<std::size_t> ks{2, 3, 4};
  std::vector<std::size_t> ls{2, 3, 4};
  std::vector<std::size_t> ns{100, 250, 500, 1000, 2500, 5000, 10000};
  std::size_t reps = 20;
  std::vector<StagingMethod> methods{StagingMethod::Bhc, StagingMethod::Kmeans};
  std::uint64_t seed = 1;
  int kmeans_k = 2;
  int restarts = 10;

  void check() const {
    if (ps.empty() || ks.empty() || ls.empty() || ns.empty() || methods.empty())
      throw std::invalid_argument("experiment grid is empty");
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    for (auto p : ps)
      if (p < 1 || p > kDefaultDpLimit) throw std::invalid_argument("p out of range");
    for (auto n : ns)
      if (n < 1) throw std::invalid_argument("N must be >= 1");
    for (auto l : ls)
      if (l < 2 || l > kMaxLevels) throw std::invalid_argument("levels out of range");
    for (auto k : ks)
      if (k < 1) throw std::invalid_argument("k must be >= 1");
  }

  std::size_t num_rows() const {
    return ps.size() * ks.size() * ls.size() * ns.size() * reps * methods.size();
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.push_back(to_string(m));
  return json{{"p", c.ps},       {"k", c.ks},           {"l", c.ls},
              {"N", c.ns},       {"reps", c.reps},      {"methods", methods},
              {"seed", c.seed},  {"kmeans_k", c.kmeans_k}, {"restarts", c.restarts}};
}

// One grid cell repetition for one method.
struct ResultRow {
  std::size_t p = 0, k = 0, l = 0, n = 0, rep = 0;
  StagingMethod method = StagingMethod::Bhc;
  double cid = 0.0;          // CID(truth, estimate)
  std::size_t kendall = 0;   // vs the true causal order
  double bic = 0.0;          // decomposed BIC of the fitted tree
  double seconds = 0.0;      // wall clock of the search; kept out of results.csv
};

inline const char* kResultsHeader = "p,k,l,N,rep,method,cid,kendall,bic";

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string row_key(std::size_t p, std::size_t k, std::size_t l, std::size_t n, std::size_t rep,
                           const std::string& method) {
  return std::to_string(p) + "," + std::to_string(k) + "," + std::to_string(l) + "," + std::to_string(n) + "," +
         std::to_string(rep) + "," + method;
}

inline std::string format_row(const ResultRow& r) {
  return row_key(r.p, r.k, r.l, r.n, r.rep, to_string(r.method)) + "," + format_number(r.cid) + "," +
         std::to_string(r.kendall) + "," + format_number(r.bic);
}

struct CellTask {
  std::size_t p, k, l, n, rep;
};

// Seeds of one cell repetition. The true tree depends on (p, k, l, rep) only,
// so every sample size of a repetition shares it.
inline std::uint64_t tree_seed(const ExperimentConfig& c, const CellTask& t) {
  return derive_seed(c.seed, {1, t.p, t.k, t.l, t.rep});
}
inline std::uint64_t data_seed(const ExperimentConfig& c, const CellTask& t) {
  return derive_seed(c.seed, {2, t.p, t.k, t.l, t.n, t.rep});
}
inline std::uint64_t shuffle_seed(const ExperimentConfig& c, const CellTask& t) {
  return derive_seed(c.seed, {3, t.p, t.k, t.l, t.n, t.rep});
}
inline std::uint64_t search_seed(const ExperimentConfig& c, const CellTask& t) {
  return derive_seed(c.seed, {4, t.p, t.k, t.l, t.n, t.rep});
}

// Generate, sample, shuffle, discover with each method, compare to the truth.
inline std::vector<ResultRow> run_cell(const ExperimentConfig& c, const CellTask& t) {
  const auto truth = random_staged_tree(GenConfig{t.p, t.l, t.k, tree_seed(c, t)});
  const auto data = sample(truth, t.n, data_seed(c, t));
  const auto shuffled = shuffle_variables(data, shuffle_seed(c, t)).first;
  std::vector<ResultRow> rows;
  for (auto method : c.methods) {
    SearchOptions opts;
    opts.method = method;
    opts.k = c.kmeans_k;
    opts.restarts = c.restarts;
    opts.seed = search_seed(c, t);
    const auto start = std::chrono::steady_clock::now();
    const auto found = best_order_dp(shuffled, opts);
    const auto stop = std::chrono::steady_clock::now();
    ResultRow row{t.p, t.k, t.l, t.n, t.rep, method};
    row.cid = cid(truth, found.tree).total;
    row.kendall = kendall(truth.names(), found.tree.names());
    row.bic = found.score;
    row.seconds = std::chrono::duration<double>(stop - start).count();
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<CellTask> grid_tasks(const ExperimentConfig& c) {
  std::vector<CellTask> tasks;
  for (auto p : c.ps)
    for (auto k : c.ks)
      for (auto l : c.ls)
        for (auto n : c.ns)
          for (std::size_t rep = 0; rep < c.reps; ++rep) tasks.push_back({p, k, l, n, rep});
  return tasks;
}

struct ExperimentSummary {
  std::size_t computed = 0;  // rows produced by this run
  std::size_t resumed = 0;   // rows taken from an existing output
};

// Runs the grid and writes `out` (results CSV, rows in grid order),
// `out`.timing.csv (wall-clock seconds) and `out`.meta.json (provenance).
// Completed rows already present in `out` are kept and not recomputed; rows
// are appended as they finish so an interrupted run can be resumed.
inline ExperimentSummary run_experiment(const ExperimentConfig& c, const std::string& out, std::size_t threads) {
  c.check();
  auto key_of = [](const std::string& line) {
    std::size_t pos = 0;
    for (int commas = 0; commas < 6; ++commas) pos = line.find(',', pos) + 1;
    return line.substr(0, pos - 1);
  };
  std::map<std::string, std::string> done;  // row key -> full line
  if (std::filesystem::exists(out)) {
    auto text = read_file(out);
    text.erase(text.find_last_of('\n') == std::string::npos ? 0 : text.find_last_of('\n') + 1);  // torn final line
    const auto records = parse_csv(text);
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& f = records[r].second;
      if (f.size() != 9) continue;
      std::string line;
      for (std::size_t j = 0; j < f.size(); ++j) line += (j ? "," : "") + f[j];
      done[key_of(line)] = line;
    }
  }

  ExperimentSummary summary;
  std::vector<CellTask> todo;
  for (const auto& t : grid_tasks(c)) {
    bool complete = true;
    for (auto m : c.methods) complete = complete && done.count(row_key(t.p, t.k, t.l, t.n, t.rep, to_string(m)));
    if (complete) summary.resumed += c.methods.size();
    else todo.push_back(t);
  }

  const std::string timing_path = out + ".timing.csv";
  const bool timing_exists = std::filesystem::exists(timing_path);
  {
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write '" + out + "'");
    o << kResultsHeader << "\r\n";
    for (const auto& [k, line] : done) o << line << "\r\n";
  }
  std::ofstream results(out, std::ios::binary | std::ios::app);
  std::ofstream timing(timing_path, std::ios::binary | std::ios::app);
  if (!timing_exists) timing << "p,k,l,N,rep,method,seconds\r\n";
  std::mutex io_mutex;
  parallel_for(todo.size(), threads, [&](std::size_t i) {
    const auto rows = run_cell(c, todo[i]);
    std::lock_guard lock(io_mutex);
    for (const auto& r : rows) {
      const auto line = format_row(r);
      done[key_of(line)] = line;
      results << line << "\r\n";
      timing << row_key(r.p, r.k, r.l, r.n, r.rep, to_string(r.method)) << "," << format_number(r.seconds) << "\r\n";
    }
    results.flush();
    timing.flush();
    summary.computed += rows.size();
  });
  results.close();
  timing.close();

  // Final file in grid order, independent of completion order.
  std::string text = std::string(kResultsHeader) + "\r\n";
  for (const auto& t : grid_tasks(c))
    for (auto m : c.methods) {
      auto it = done.find(row_key(t.p, t.k, t.l, t.n, t.rep, to_string(m)));
      if (it != done.end()) text += it->second + "\r\n";
    }
  write_file(out, text);

  json meta{{"tool", "stagecause"},
            {"version", kVersion},
            {"config", config_to_json(c)},
            {"generator",
             {{"staging", "uniform surjective assignment of contexts to min(k, #contexts) stages"},
              {"parameters", "Dirichlet(1) per stage"},
              {"seeds", "SplitMix64 chain of (master, stream, p, k, l[, N], rep)"}}},
            {"columns", kResultsHeader}};
  write_file(out + ".meta.json", meta.dump(2) + "\n");
  return summary;
}

// ------------------------------------------------------------- CID vs SID

struct CidSidRow {
  std::size_t pair_id = 0;
  std::size_t sid = 0;
  double cid = 0.0;
};

struct CidSidResult {
  std::vector<CidSidRow> rows;
  double pearson = 0.0;
  double spearman = 0.0;
};

// CID and SID for random DAG pairs over p binary variables; each DAG becomes
// a staged tree along its smallest-index-first topological order.
inline CidSidResult cid_vs_sid_experiment(std::size_t pairs, std::size_t p, std::uint64_t seed,
                                          std::size_t threads = 1) {
  if (p > 7) throw std::invalid_argument("p must be <= 7");
  const auto vars = default_variables(p, 2);
  CidSidResult res;
  res.rows.resize(pairs);
  parallel_for(pairs, threads, [&](std::size_t k) {
    const auto truth = random_dag_uniform(p, derive_seed(seed, {k, 0}));
    const auto estimate = random_dag_uniform(p, derive_seed(seed, {k, 1}));
    const auto t = dag_to_staged_tree(truth, vars);
    const auto s = dag_to_staged_tree(estimate, vars);
    res.rows[k] = {k, sid(truth, estimate), cid(t, s).total};
  });
  std::vector<double> x, y;
  for (const auto& r : res.rows) {
    x.push_back(static_cast<double>(r.sid));
    y.push_back(r.cid);
  }
  if (pairs >= 2) {
    res.pearson = pearson(x, y);
    res.spearman = spearman(x, y);
  }
  return res;
}

}  // namespace stagecause
