#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"

namespace gadlab {

namespace io_detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == '\r')) ++k;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

inline bool is_comment_or_blank(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

inline Label parse_label(std::string_view tok, const std::string& src, long line) {
  Label v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || v < 0)
    throw ParseError(src, line, "expected a non-negative integer node label, got '" + std::string(tok) + "'");
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace io_detail

/// Reads a whitespace-separated "u v" edge list. Lines starting with '#' are
/// comments. Self-loops are dropped. With `collapse_duplicates` repeated and
/// reversed pairs merge silently; without it they are a parse error.
/// Nodes are the labels that occur in at least one retained edge, indexed in
/// ascending label order.
inline Graph load_edge_list(const std::string& path, bool collapse_duplicates = true) {
  auto in = io_detail::open_input(path);
  std::vector<std::pair<Label, Label>> raw;
  std::set<std::pair<Label, Label>> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io_detail::is_comment_or_blank(line)) continue;
    auto toks = io_detail::split_ws(line);
    if (toks.size() != 2)
      throw ParseError(path, lineno, "expected 'u v', got " + std::to_string(toks.size()) + " fields");
    Label u = io_detail::parse_label(toks[0], path, lineno);
    Label v = io_detail::parse_label(toks[1], path, lineno);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) {
      if (!collapse_duplicates) throw ParseError(path, lineno, "duplicate pair " + std::to_string(u) + " " + std::to_string(v));
      continue;
    }
    raw.emplace_back(u, v);
  }
  if (raw.empty()) throw DataError("'" + path + "' contains no edges");

  std::vector<Label> labels;
  labels.reserve(2 * raw.size());
  for (auto [u, v] : raw) {
    labels.push_back(u);
    labels.push_back(v);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto index = [&](Label l) { return static_cast<int>(std::lower_bound(labels.begin(), labels.end(), l) - labels.begin()); };
  std::vector<NodePair> edges;
  edges.reserve(raw.size());
  for (auto [u, v] : raw) edges.emplace_back(index(u), index(v));
  const int n = static_cast<int>(labels.size());
  return Graph::from_edges(n, edges, std::move(labels));
}

/// Writes `content` to `path` via a sibling temporary and a rename, so readers
/// never observe a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("short write on '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Canonical edge list in original labels: one "u v" per line, u < v, ascending.
inline std::string format_edge_list(const Graph& g) {
  std::string out;
  out.reserve(g.num_edges() * 12);
  for (const auto& e : g.edges()) {
    out += std::to_string(g.label(e.i));
    out += ' ';
    out += std::to_string(g.label(e.j));
    out += '\n';
  }
  return out;
}

inline void save_edge_list(const Graph& g, const std::string& path) { write_file_atomic(path, format_edge_list(g)); }

/// "u y" rows with y in {0,1}. Every node of `g` must be labelled exactly once.
inline std::vector<int> load_labels(const Graph& g, const std::string& path) {
  auto in = io_detail::open_input(path);
  std::vector<int> y(static_cast<std::size_t>(g.num_nodes()), -1);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io_detail::is_comment_or_blank(line)) continue;
    auto toks = io_detail::split_ws(line);
    if (toks.size() != 2) throw ParseError(path, lineno, "expected 'u y'");
    const Label u = io_detail::parse_label(toks[0], path, lineno);
    const auto idx = g.index_of(u);
    if (!idx) throw ParseError(path, lineno, "node " + std::to_string(u) + " is not in the graph");
    if (toks[1] != "0" && toks[1] != "1") throw ParseError(path, lineno, "label must be 0 or 1");
    auto& slot = y[static_cast<std::size_t>(*idx)];
    if (slot != -1) throw ParseError(path, lineno, "node " + std::to_string(u) + " labelled twice");
    slot = toks[1] == "1" ? 1 : 0;
  }
  for (int i = 0; i < g.num_nodes(); ++i)
    if (y[static_cast<std::size_t>(i)] < 0) throw DataError("'" + path + "': node " + std::to_string(g.label(i)) + " has no label");
  return y;
}

inline std::string format_labels(const Graph& g, const std::vector<int>& y) {
  std::string out;
  for (int i = 0; i < g.num_nodes(); ++i) {
    out += std::to_string(g.label(i));
    out += ' ';
    out += std::to_string(y[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

/// Header-less comma-separated numeric rows, one per node in index order.
inline Eigen::MatrixXd load_attributes(const std::string& path, int expected_rows) {
  auto in = io_detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io_detail::is_comment_or_blank(line)) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\r')) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "non-numeric attribute '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path, lineno, "ragged attribute row");
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != expected_rows)
    throw DataError("'" + path + "' has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(expected_rows));
  const Eigen::Index p = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index c = 0; c < p; ++c) X(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  return X;
}

inline std::string format_attributes(const Eigen::MatrixXd& X) {
  std::string out;
  char buf[40];
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", X(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

/// "+ u v" / "- u v" rows in original labels, in application order.
inline std::string format_plan(const Graph& g, const PerturbationPlan& plan) {
  std::string out;
  for (const auto& op : plan.ops) {
    out += op.kind == EdgeOpKind::Add ? "+ " : "- ";
    out += std::to_string(g.label(op.i));
    out += ' ';
    out += std::to_string(g.label(op.j));
    out += '\n';
  }
  return out;
}

/// Parses a plan file against `g`. The budget of the result equals its length;
/// op validity against the graph is checked by apply_perturbation.
inline PerturbationPlan load_plan(const Graph& g, const std::string& path) {
  auto in = io_detail::open_input(path);
  PerturbationPlan plan;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io_detail::is_comment_or_blank(line)) continue;
    auto toks = io_detail::split_ws(line);
    if (toks.size() != 3 || (toks[0] != "+" && toks[0] != "-"))
      throw ParseError(path, lineno, "expected '+ u v' or '- u v'");
    const Label u = io_detail::parse_label(toks[1], path, lineno);
    const Label v = io_detail::parse_label(toks[2], path, lineno);
    const auto iu = g.index_of(u), iv = g.index_of(v);
    if (!iu || !iv) throw InvalidOpError(u, v, "node not in graph");
    if (*iu == *iv) throw InvalidOpError(u, v, "self-loop");
    const NodePair p(*iu, *iv);
    plan.ops.push_back({p.i, p.j, toks[0] == "+" ? EdgeOpKind::Add : EdgeOpKind::Delete});
  }
  plan.budget = plan.ops.size();
  return plan;
}

/// Node list file: one label per line (used for target sets).
inline std::vector<int> load_node_list(const Graph& g, const std::string& path) {
  auto in = io_detail::open_input(path);
  std::vector<int> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io_detail::is_comment_or_blank(line)) continue;
    auto toks = io_detail::split_ws(line);
    if (toks.empty()) continue;
    const Label u = io_detail::parse_label(toks[0], path, lineno);
    const auto idx = g.index_of(u);
    if (!idx) throw ParseError(path, lineno, "node " + std::to_string(u) + " is not in the graph");
    out.push_back(*idx);
  }
  return out;
}

inline std::string format_node_list(const Graph& g, const std::vector<int>& nodes) {
  std::string out;
  for (int v : nodes) {
    out += std::to_string(g.label(v));
    out += '\n';
  }
  return out;
}

}  // namespace gadlab
