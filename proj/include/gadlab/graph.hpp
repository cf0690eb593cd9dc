#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gadlab/error.hpp"

namespace gadlab {

using Label = long long;

// Unordered node pair stored canonically with i < j.
struct NodePair {
  int i = 0;
  int j = 0;

  NodePair() = default;
  NodePair(int a, int b) : i(std::min(a, b)), j(std::max(a, b)) {}

  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Simple undirected unweighted graph over dense indices 0..n-1.
///
/// Adjacency lists are kept sorted, so edge lookup is a binary search and
/// neighbourhood intersections are linear merges. Each dense index carries the
/// original node label it was read with; labels ascend with the index.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from dense-index edges. Self-loops are rejected, duplicate
  /// pairs collapse. `labels` defaults to 0..n-1 and must be strictly ascending.
  static Graph from_edges(int n, std::span<const NodePair> edges, std::vector<Label> labels = {}) {
    if (n < 0) throw DataError("negative node count");
    if (labels.empty()) {
      labels.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i;
    }
    if (labels.size() != static_cast<std::size_t>(n))
      throw DataError("label count does not match node count");
    for (std::size_t k = 1; k < labels.size(); ++k)
      if (labels[k - 1] >= labels[k]) throw DataError("node labels must be strictly ascending");

    Graph g;
    g.adj_.assign(static_cast<std::size_t>(n), {});
    for (const auto& e : edges) {
      if (e.i < 0 || e.j >= n) throw DataError("edge endpoint out of range");
      if (e.i == e.j) throw DataError("self-loop on node " + std::to_string(labels[e.i]));
      g.adj_[e.i].push_back(e.j);
      g.adj_[e.j].push_back(e.i);
    }
    std::size_t twice = 0;
    for (auto& row : g.adj_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      twice += row.size();
    }
    g.num_edges_ = twice / 2;
    g.labels_ = std::move(labels);
    return g;
  }

  int num_nodes() const noexcept { return static_cast<int>(adj_.size()); }
  std::size_t num_edges() const noexcept { return num_edges_; }

  int degree(int i) const { return static_cast<int>(adj_[static_cast<std::size_t>(i)].size()); }
  std::span<const int> neighbors(int i) const { return adj_[static_cast<std::size_t>(i)]; }

  bool has_edge(int i, int j) const {
    const auto& row = adj_[static_cast<std::size_t>(i)];
    return std::binary_search(row.begin(), row.end(), j);
  }

  /// Canonical edge list: i < j, ascending lexicographically.
  std::vector<NodePair> edges() const {
    std::vector<NodePair> out;
    out.reserve(num_edges_);
    for (int i = 0; i < num_nodes(); ++i)
      for (int j : adj_[static_cast<std::size_t>(i)])
        if (j > i) out.emplace_back(i, j);
    return out;
  }

  const std::vector<Label>& labels() const noexcept { return labels_; }
  Label label(int i) const { return labels_[static_cast<std::size_t>(i)]; }

  std::optional<int> index_of(Label label) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
    if (it == labels_.end() || *it != label) return std::nullopt;
    return static_cast<int>(it - labels_.begin());
  }

  bool has_isolated_node() const {
    return std::any_of(adj_.begin(), adj_.end(), [](const auto& row) { return row.empty(); });
  }

  /// Copy with every listed pair toggled (edge <-> non-edge). Pairs must be distinct.
  Graph with_toggled(std::span<const NodePair> pairs) const {
    Graph g = *this;
    for (const auto& p : pairs) g.toggle(p.i, p.j);
    return g;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.labels_ == b.labels_ && a.adj_ == b.adj_;
  }

 private:
  void toggle(int i, int j) {
    if (i == j) throw DataError("cannot toggle a diagonal entry");
    auto& ri = adj_[static_cast<std::size_t>(i)];
    auto& rj = adj_[static_cast<std::size_t>(j)];
    auto it = std::lower_bound(ri.begin(), ri.end(), j);
    if (it != ri.end() && *it == j) {
      ri.erase(it);
      rj.erase(std::lower_bound(rj.begin(), rj.end(), i));
      --num_edges_;
    } else {
      ri.insert(it, j);
      rj.insert(std::lower_bound(rj.begin(), rj.end(), i), i);
      ++num_edges_;
    }
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Label> labels_;
  std::size_t num_edges_ = 0;
};

enum class EdgeOpKind { Add, Delete };

struct EdgeOp {
  int i = 0;
  int j = 0;
  EdgeOpKind kind = EdgeOpKind::Add;

  NodePair pair() const { return {i, j}; }
  friend bool operator==(const EdgeOp&, const EdgeOp&) = default;
};

/// Ordered edge modifications together with the budget they were planned under.
struct PerturbationPlan {
  std::vector<EdgeOp> ops;
  std::size_t budget = 0;

  std::size_t size() const noexcept { return ops.size(); }
  bool empty() const noexcept { return ops.empty(); }

  /// First `b` ops under budget `b`.
  PerturbationPlan prefix(std::size_t b) const {
    PerturbationPlan p;
    p.ops.assign(ops.begin(), ops.begin() + static_cast<std::ptrdiff_t>(std::min(b, ops.size())));
    p.budget = b;
    return p;
  }

  friend bool operator==(const PerturbationPlan&, const PerturbationPlan&) = default;
};

/// Number of entries where two graphs on the same node set differ, halved
/// (i.e. the count of toggled unordered pairs).
inline std::size_t edge_distance(const Graph& a, const Graph& b) {
  if (a.num_nodes() != b.num_nodes()) throw DataError("edge_distance: node counts differ");
  std::size_t diff = 0;
  for (int i = 0; i < a.num_nodes(); ++i) {
    auto ra = a.neighbors(i);
    auto rb = b.neighbors(i);
    std::vector<int> sym;
    std::set_symmetric_difference(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(sym));
    diff += sym.size();
  }
  return diff / 2;
}

}  // namespace gadlab
