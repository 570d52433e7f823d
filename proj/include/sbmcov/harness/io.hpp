#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sbmcov/model.hpp"

namespace sbmcov::harness {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedGraph {
  Graph graph;
  std::vector<std::string> ids;  // vertex index -> original id
  long edges = 0;
  long duplicates = 0;
  long self_loops = 0;
  bool remapped = false;         // ids were not already 0..n-1

  [[nodiscard]] std::unordered_map<std::string, int> index() const {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < ids.size(); ++i)
      m.emplace(ids[i], static_cast<int>(i));
    return m;
  }
};

namespace detail {

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (c == '"') {
        if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = !quoted;
        }
      } else if (c == ',' && !quoted) {
        out.push_back(strip(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(strip(cur));
  } else {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  }
  return out;
}

inline std::optional<long long> as_nonnegative_int(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 0) return std::nullopt;
  return v;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool looks_like_header(const std::vector<std::string>& f) {
  static const std::set<std::string> names = {
      "src", "dst", "source", "target", "from", "to", "u", "v",
      "node1", "node2", "i", "j", "vertex1", "vertex2", "a", "b"};
  return f.size() == 2 && names.count(lower(f[0])) && names.count(lower(f[1]));
}

// Sorted id order: numeric when every id is a non-negative integer.
inline std::vector<std::string> ordered_ids(const std::set<std::string>& seen) {
  std::vector<std::string> ids(seen.begin(), seen.end());
  const bool numeric = std::all_of(ids.begin(), ids.end(), [](const auto& s) {
    return as_nonnegative_int(s).has_value();
  });
  if (numeric)
    std::sort(ids.begin(), ids.end(), [](const auto& x, const auto& y) {
      return *as_nonnegative_int(x) < *as_nonnegative_int(y);
    });
  return ids;
}

}  // namespace detail

/// Undirected simple graph from an edge list. Separators: comma, tab or
/// spaces. Lines starting with '#' or '%' are comments; an optional header
/// such as "src,dst" is skipped. Duplicate edges collapse, self-loops are
/// dropped, and both are counted.
inline LoadedGraph parse_edge_list(std::istream& in,
                                   const std::string& origin = "edge list") {
  std::vector<std::pair<std::string, std::string>> raw;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  bool first = true;
  LoadedGraph g;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::strip(line);
    if (t.empty() || t[0] == '#' || t[0] == '%') continue;
    const auto f = detail::split_fields(t);
    if (first && detail::looks_like_header(f)) {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      throw ParseError(origin + ":" + std::to_string(lineno) +
                       ": expected two vertex ids, got '" + t + "'");
    seen.insert(f[0]);
    seen.insert(f[1]);
    raw.emplace_back(f[0], f[1]);
  }
  g.ids = detail::ordered_ids(seen);
  const auto n = static_cast<int>(g.ids.size());
  for (int i = 0; i < n; ++i)
    if (g.ids[static_cast<std::size_t>(i)] != std::to_string(i)) g.remapped = true;
  const auto idx = g.index();
  g.graph.A = Matrix::Zero(n, n);
  for (const auto& [u, v] : raw) {
    const int i = idx.at(u), j = idx.at(v);
    if (i == j) {
      ++g.self_loops;
      continue;
    }
    if (g.graph.A(i, j) != 0.0) {
      ++g.duplicates;
      continue;
    }
    g.graph.A(i, j) = g.graph.A(j, i) = 1.0;
    ++g.edges;
  }
  return g;
}

inline LoadedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list '" + path + "'");
  return parse_edge_list(in, path);
}

/// "i,j" for every edge with i < j, using `ids` when given.
inline void write_edge_list(const Graph& g, std::ostream& out,
                            const std::vector<std::string>& ids = {}) {
  auto name = [&](int i) {
    return ids.empty() ? std::to_string(i) : ids[static_cast<std::size_t>(i)];
  };
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (g.A(i, j) != 0.0) out << name(i) << ',' << name(j) << '\n';
}

struct Covariates {
  Labels z;                         // 0-based level per vertex
  std::vector<std::string> levels;  // level index -> label
};

/// Level index for `v`: how many thresholds are <= v.
inline int bin_level(double v, const std::vector<double>& thresholds) {
  return static_cast<int>(
      std::upper_bound(thresholds.begin(), thresholds.end(), v) -
      thresholds.begin());
}

/// Reads column `column` of a CSV with header `vertex,<covariates...>`.
/// With thresholds the values are binned numerically; otherwise distinct
/// strings are coded in lexicographic order.
inline Covariates parse_covariates(std::istream& in, const std::string& column,
                                   const std::vector<std::string>& vertex_ids,
                                   const std::vector<double>& thresholds = {},
                                   const std::string& origin = "covariates") {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ParseError("thresholds must be sorted ascending");
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::strip(line);
    if (t.empty() || t[0] == '#') continue;
    header = detail::split_fields(t);
    break;
  }
  if (header.empty()) throw ParseError(origin + ": missing header row");
  const auto col_it = std::find(header.begin(), header.end(), column);
  if (col_it == header.end())
    throw ParseError(origin + ": no column named '" + column + "'");
  const auto col = static_cast<std::size_t>(col_it - header.begin());
  if (col == 0) throw ParseError(origin + ": covariate column cannot be the id");

  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < vertex_ids.size(); ++i)
    index.emplace(vertex_ids[i], static_cast<int>(i));
  std::vector<std::optional<std::string>> value(vertex_ids.size());
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::strip(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = detail::split_fields(t);
    const std::string where = origin + ":" + std::to_string(lineno);
    if (f.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(f.size()));
    const auto it = index.find(f[0]);
    if (it == index.end())
      throw ParseError(where + ": unknown vertex '" + f[0] + "'");
    if (value[static_cast<std::size_t>(it->second)])
      throw ParseError(where + ": duplicate row for vertex '" + f[0] + "'");
    value[static_cast<std::size_t>(it->second)] = f[col];
  }
  for (std::size_t i = 0; i < value.size(); ++i)
    if (!value[i])
      throw ParseError(origin + ": no covariate row for vertex '" +
                       vertex_ids[i] + "'");

  Covariates out;
  out.z.resize(value.size());
  if (!thresholds.empty()) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(*value[i], &pos);
        if (pos != value[i]->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(origin + ": vertex '" + vertex_ids[i] +
                         "' has non-numeric value '" + *value[i] + "'");
      }
      out.z[i] = bin_level(v, thresholds);
    }
    auto label = [](double x) {
      std::ostringstream s;
      s << x;
      return s.str();
    };
    for (std::size_t k = 0; k <= thresholds.size(); ++k) {
      const std::string lo = k == 0 ? "-inf" : label(thresholds[k - 1]);
      const std::string hi =
          k == thresholds.size() ? "inf" : label(thresholds[k]);
      out.levels.push_back("[" + lo + "," + hi + ")");
    }
  } else {
    std::set<std::string> distinct;
    for (const auto& v : value) distinct.insert(*v);
    out.levels.assign(distinct.begin(), distinct.end());
    std::map<std::string, int> code;
    for (std::size_t k = 0; k < out.levels.size(); ++k)
      code.emplace(out.levels[k], static_cast<int>(k));
    for (std::size_t i = 0; i < value.size(); ++i) out.z[i] = code.at(*value[i]);
  }
  return out;
}

inline Covariates load_covariates(const std::string& path,
                                  const std::string& column,
                                  const std::vector<std::string>& vertex_ids,
                                  const std::vector<double>& thresholds = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open covariates '" + path + "'");
  return parse_covariates(in, column, vertex_ids, thresholds, path);
}

/// Integer labels from a CSV `vertex,<column>` (for ground-truth files).
inline Labels load_labels(const std::string& path, const std::string& column,
                          const std::vector<std::string>& vertex_ids) {
  return load_covariates(path, column, vertex_ids).z;
}

}  // namespace sbmcov::harness
