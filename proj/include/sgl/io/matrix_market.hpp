#ifndef SGL_IO_MATRIX_MARKET_HPP
#define SGL_IO_MATRIX_MARKET_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/io/atomic_file.hpp"

namespace sgl::io {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace detail

/// Parses a square Matrix Market coordinate matrix as a weighted adjacency.
///
/// Accepts real, integer and pattern fields with symmetric or general
/// symmetry. Entries from either triangle are symmetrized; the diagonal is
/// ignored. A pair given twice must carry the same weight.
inline WeightedGraph parse_matrix_market(const std::string& text, const std::string& source = "<input>") {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> IoError {
    return IoError(source + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw IoError(source + ": empty file");
  ++line_no;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw fail("missing %%MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix" || format != "coordinate") throw fail("only coordinate matrices are supported");
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer" && field != "double") {
    throw fail("unsupported field '" + field + "'");
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw fail("unsupported symmetry '" + symmetry + "'");
  }

  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line()) throw fail("missing size line");
  long long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw fail("malformed size line");
    }
  }
  if (rows != cols) throw fail("adjacency matrix must be square");
  const auto n = static_cast<std::size_t>(rows);

  std::map<NodePair, double> weights;
  for (long long k = 0; k < nnz; ++k) {
    if (!next_data_line()) throw fail("expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double w = 1.0;
    if (!(entry >> i >> j) || (!pattern && !(entry >> w))) throw fail("malformed entry");
    if (i < 1 || j < 1 || i > rows || j > cols) throw fail("index out of range");
    if (i == j) continue;
    if (!std::isfinite(w) || w <= 0.0) throw fail("edge weights must be positive and finite");
    const auto a = static_cast<NodeId>(i - 1);
    const auto b = static_cast<NodeId>(j - 1);
    const NodePair p{std::min(a, b), std::max(a, b)};
    const auto [it, inserted] = weights.emplace(p, w);
    if (!inserted && std::abs(it->second - w) > 1e-12 * std::max(std::abs(it->second), std::abs(w))) {
      throw fail(fmt::format("conflicting weights {} and {} for entry ({}, {})", it->second, w, i, j));
    }
  }
  std::vector<Edge> edges;
  edges.reserve(weights.size());
  for (const auto& [p, w] : weights) edges.push_back({p.s, p.t, w});
  return WeightedGraph(n, edges);
}

inline WeightedGraph read_matrix_market(const std::filesystem::path& path) {
  return parse_matrix_market(read_file(path), path.string());
}

/// Symmetric real coordinate file holding the strict lower triangle, 1-based.
inline std::string format_matrix_market(const WeightedGraph& g) {
  std::string out = "%%MatrixMarket matrix coordinate real symmetric\n";
  out += fmt::format("{} {} {}\n", g.node_count(), g.node_count(), g.edge_count());
  std::vector<Edge> lower(g.edges().begin(), g.edges().end());
  std::sort(lower.begin(), lower.end(), [](const Edge& a, const Edge& b) {
    return a.s != b.s ? a.s < b.s : a.t < b.t;
  });
  for (const Edge& e : lower) out += fmt::format("{} {} {}\n", e.t + 1, e.s + 1, e.w);
  return out;
}

inline void write_matrix_market(const std::filesystem::path& path, const WeightedGraph& g) {
  write_file_atomic(path, format_matrix_market(g));
}

}  // namespace sgl::io

#endif  // SGL_IO_MATRIX_MARKET_HPP
