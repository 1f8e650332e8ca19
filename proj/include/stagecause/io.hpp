#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stagecause/dataset.hpp"
#include "stagecause/graph.hpp"
#include "stagecause/metrics.hpp"
#include "stagecause/model.hpp"

namespace stagecause {

using json = nlohmann::json;

// Parse or format error in an input file; `line` is 1-based, 0 if unknown.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------- CSV

// RFC-4180 records: quoted fields may contain commas, CRLF and "" escapes.
// Returns records together with the line each one starts on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(const std::string& text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, record_line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.emplace_back(record_line, std::move(record));
    record.clear();
    record_line = line;
  };
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char ch = text[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (field_started) throw FormatError("stray quote inside unquoted field", line);
      quoted = field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\r') {
      continue;
    } else if (ch == '\n') {
      ++line;
      end_record();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted field", line);
  if (field_started || !record.empty()) end_record();
  return records;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

namespace detail {

inline bool all_integers(const std::vector<std::string>& labels) {
  return std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    if (s.empty()) return false;
    std::size_t start = (s[0] == '-') ? 1 : 0;
    return start < s.size() && std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start), s.end(),
                                           [](char c) { return c >= '0' && c <= '9'; });
  });
}

}  // namespace detail

using LevelHints = std::map<std::string, std::vector<std::string>>;

// Header row of names, then one row per observation. Levels come from
// `hints` where given, else from the observed labels (numeric order when all
// labels are integers, lexicographic otherwise).
inline Dataset parse_dataset_csv(const std::string& text, const LevelHints& hints = {}) {
  const auto records = parse_csv(text);
  if (records.empty()) throw FormatError("no rows: file is empty");
  const auto& header = records.front().second;
  const std::size_t p = header.size();
  if (records.size() == 1) throw FormatError("no rows");
  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].second.size() != p)
      throw FormatError("expected " + std::to_string(p) + " fields, found " + std::to_string(records[r].second.size()),
                        records[r].first);

  std::vector<VariableMeta> vars;
  for (std::size_t j = 0; j < p; ++j) {
    VariableMeta v{header[j], {}};
    if (v.name.empty()) throw FormatError("empty variable name in header", records.front().first);
    if (auto it = hints.find(v.name); it != hints.end()) {
      v.levels = it->second;
    } else {
      for (std::size_t r = 1; r < records.size(); ++r) v.levels.push_back(records[r].second[j]);
      std::sort(v.levels.begin(), v.levels.end());
      v.levels.erase(std::unique(v.levels.begin(), v.levels.end()), v.levels.end());
      if (detail::all_integers(v.levels))
        std::sort(v.levels.begin(), v.levels.end(),
                  [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
      if (v.levels.size() < 2)
        throw FormatError("column '" + v.name + "' has a single level; supply its levels explicitly");
    }
    check_variable(v);
    vars.push_back(std::move(v));
  }
  std::vector<std::map<std::string, std::uint8_t>> index(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t x = 0; x < vars[j].size(); ++x) index[j][vars[j].levels[x]] = static_cast<std::uint8_t>(x);
  std::vector<std::uint8_t> cells;
  cells.reserve((records.size() - 1) * p);
  for (std::size_t r = 1; r < records.size(); ++r)
    for (std::size_t j = 0; j < p; ++j) {
      auto it = index[j].find(records[r].second[j]);
      if (it == index[j].end())
        throw FormatError("unknown level '" + records[r].second[j] + "' for '" + vars[j].name + "'", records[r].first);
      cells.push_back(it->second);
    }
  return Dataset(std::move(vars), std::move(cells));
}

inline Dataset read_dataset_csv(const std::string& path, const LevelHints& hints = {}) {
  return parse_dataset_csv(read_file(path), hints);
}

inline std::string format_dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.num_vars(); ++j) out += (j ? "," : "") + csv_field(data.var(j).name);
  out += "\r\n";
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t j = 0; j < data.num_vars(); ++j)
      out += (j ? "," : "") + csv_field(data.var(j).levels[static_cast<std::size_t>(data.at(r, j))]);
    out += "\r\n";
  }
  return out;
}

// ---------------------------------------------------------------- model JSON

inline json tree_to_json(const StagedTree& t) {
  json j;
  j["order"] = t.names();
  j["levels"] = json::object();
  for (const auto& v : t.vars) j["levels"][v.name] = v.levels;
  j["staging"] = t.staging;
  if (t.params) {
    json params = json::array();
    for (const auto& stratum : *t.params) {
      json obj = json::object();
      for (std::size_t s = 0; s < stratum.size(); ++s) obj[std::to_string(s)] = stratum[s];
      params.push_back(obj);
    }
    j["params"] = params;
  }
  return j;
}

inline StagedTree tree_from_json(const json& j) {
  try {
    StagedTree t;
    const auto names = j.at("order").get<std::vector<std::string>>();
    for (const auto& name : names)
      t.vars.push_back({name, j.at("levels").at(name).get<std::vector<std::string>>()});
    t.order.resize(names.size());
    std::iota(t.order.begin(), t.order.end(), std::size_t{0});
    t.staging = j.at("staging").get<std::vector<std::vector<StageId>>>();
    if (j.contains("params") && !j["params"].is_null()) {
      std::vector<std::vector<ProbVector>> params;
      for (const auto& obj : j["params"]) {
        std::vector<ProbVector> stratum(obj.size());
        for (auto it = obj.begin(); it != obj.end(); ++it) {
          const auto s = std::stoul(it.key());
          if (s >= stratum.size()) throw FormatError("stage id " + it.key() + " out of range in params");
          stratum[s] = it.value().get<ProbVector>();
        }
        params.push_back(std::move(stratum));
      }
      t.params = std::move(params);
    }
    auto report = validate_tree(t);
    if (!report.ok()) throw FormatError("invalid model: " + report.violations.front());
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model JSON: ") + e.what());
  }
}

inline StagedTree read_tree_json(const std::string& path) {
  try {
    return tree_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON in '") + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------- graphs

inline json dag_to_json(const Dag& g, const std::vector<std::string>& names) {
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({names.at(a), names.at(b)});
  return json{{"variables", names}, {"edges", edges}};
}

// Returns the graph and its vertex names.
inline std::pair<Dag, std::vector<std::string>> dag_from_json(const json& j) {
  try {
    auto names = j.at("variables").get<std::vector<std::string>>();
    auto index = [&](const std::string& n) {
      auto it = std::find(names.begin(), names.end(), n);
      if (it == names.end()) throw FormatError("edge mentions unknown variable '" + n + "'");
      return static_cast<std::size_t>(it - names.begin());
    };
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw FormatError("edges must be [from, to] pairs");
      edges.emplace_back(index(e[0].get<std::string>()), index(e[1].get<std::string>()));
    }
    return {Dag(names.size(), edges), names};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed DAG JSON: ") + e.what());
  }
}

inline json pdag_to_json(const Pdag& g, const std::vector<std::string>& names) {
  json directed = json::array(), undirected = json::array();
  for (auto [a, b] : g.directed) directed.push_back({names.at(a), names.at(b)});
  for (auto [a, b] : g.undirected) undirected.push_back({names.at(a), names.at(b)});
  return json{{"variables", names}, {"directed", directed}, {"undirected", undirected}};
}

// ---------------------------------------------------------------- reports

inline json cid_to_json(const CidReport& r, const StagedTree& ref) {
  json vars = json::array();
  for (std::size_t i = 0; i < r.per_variable.size(); ++i) {
    const auto& v = r.per_variable[i];
    auto names_of = [&](const std::vector<std::size_t>& pos) {
      std::vector<std::string> out;
      for (auto q : pos) out.push_back(ref.vars[q].name);
      return out;
    };
    json wrong = json::array();
    for (const auto& ctx : v.wrong) {
      json c = json::array();
      for (std::size_t q = 0; q < ctx.size(); ++q) c.push_back(ref.vars[q].levels[static_cast<std::size_t>(ctx[q])]);
      wrong.push_back(c);
    }
    vars.push_back({{"name", v.name},
                    {"cid", v.value},
                    {"contexts", v.contexts},
                    {"wrong", wrong},
                    {"I", names_of(v.I)},
                    {"J", names_of(v.J)},
                    {"K", names_of(v.K)}});
  }
  return json{{"total", r.total}, {"variables", vars}};
}

}  // namespace stagecause
