#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/rng.hpp"

namespace gadlab {

/// Barabasi-Albert preferential attachment.
///
/// Starts from `m` nodes without edges; node `m` links to all of them, and
/// every later node links to `m` distinct existing nodes drawn with
/// probability proportional to degree. Yields exactly (n - m) * m edges.
inline Graph generate_ba(int n, int m, std::uint64_t seed) {
  if (m < 1) throw UsageError("generate_ba: m must be >= 1");
  if (n <= m) throw UsageError("generate_ba: need n > m (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");

  Rng rng = make_rng(seed, 0xba);
  std::vector<NodePair> edges;
  edges.reserve(static_cast<std::size_t>(n - m) * static_cast<std::size_t>(m));
  // Every edge endpoint appended once: uniform draws from this pool are degree-proportional.
  std::vector<int> endpoints;
  endpoints.reserve(2 * edges.capacity());

  for (int t = 0; t < m; ++t) {
    edges.emplace_back(t, m);
    endpoints.push_back(t);
    endpoints.push_back(m);
  }
  std::vector<int> chosen;
  for (int v = m + 1; v < n; ++v) {
    chosen.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (static_cast<int>(chosen.size()) < m) {
      const int u = endpoints[pick(rng)];
      if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
    }
    for (int u : chosen) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  return Graph::from_edges(n, edges);
}

/// G(n, p) random graph; used for tests and synthetic benchmarks.
inline Graph generate_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 1) throw UsageError("generate_erdos_renyi: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("generate_erdos_renyi: p must lie in [0, 1]");
  Rng rng = make_rng(seed, 0xe7);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<NodePair> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < p) edges.emplace_back(i, j);
  return Graph::from_edges(n, edges);
}

/// Induced subgraph on `nodes` (dense indices of `g`), re-indexed in ascending order.
inline Graph induced_subgraph(const Graph& g, std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<int> remap(static_cast<std::size_t>(g.num_nodes()), -1);
  std::vector<Label> labels;
  labels.reserve(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    remap[static_cast<std::size_t>(nodes[k])] = static_cast<int>(k);
    labels.push_back(g.label(nodes[k]));
  }
  std::vector<NodePair> edges;
  for (int u : nodes)
    for (int v : g.neighbors(u))
      if (v > u && remap[static_cast<std::size_t>(v)] >= 0)
        edges.emplace_back(remap[static_cast<std::size_t>(u)], remap[static_cast<std::size_t>(v)]);
  return Graph::from_edges(static_cast<int>(nodes.size()), edges, std::move(labels));
}

/// Connected components as lists of dense indices, each sorted ascending,
/// ordered by their smallest member.
inline std::vector<std::vector<int>> connected_components(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::queue<int> q;
    q.push(s);
    comp[static_cast<std::size_t>(s)] = id;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      out.back().push_back(u);
      for (int v : g.neighbors(u)) {
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = id;
          q.push(v);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

/// Largest connected component. Ties go to the component holding the smallest
/// original label; since labels ascend with index, that is the first one found.
inline Graph largest_connected_component(const Graph& g) {
  if (g.num_nodes() == 0) throw DataError("largest_connected_component: empty graph");
  auto comps = connected_components(g);
  std::size_t best = 0;
  for (std::size_t c = 1; c < comps.size(); ++c)
    if (comps[c].size() > comps[best].size()) best = c;
  return induced_subgraph(g, std::move(comps[best]));
}

struct CliqueInjection {
  Graph graph;
  std::vector<int> labels;               // 1 on injected nodes
  std::vector<std::vector<int>> cliques;  // member indices per clique
  std::size_t added_edges = 0;
};

/// Picks num_cliques * clique_size distinct nodes and makes each consecutive
/// group of clique_size fully connected. Existing edges are kept.
inline CliqueInjection inject_cliques(const Graph& g, int num_cliques, int clique_size, std::uint64_t seed) {
  const int n = g.num_nodes();
  if (num_cliques < 0 || clique_size < 2)
    throw UsageError("inject_cliques: need num_cliques >= 0 and clique_size >= 2");
  const long long needed = static_cast<long long>(num_cliques) * clique_size;
  if (needed > n)
    throw UsageError("inject_cliques: " + std::to_string(needed) + " clique members requested but graph has " +
                     std::to_string(n) + " nodes");

  Rng rng = make_rng(seed, 0xc11);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: only the first `needed` slots are drawn.
  for (long long k = 0; k < needed; ++k) {
    std::uniform_int_distribution<long long> pick(k, n - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }

  CliqueInjection out;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<NodePair> edges = g.edges();
  const std::size_t before = edges.size();
  for (int c = 0; c < num_cliques; ++c) {
    std::vector<int> members(order.begin() + static_cast<std::ptrdiff_t>(c) * clique_size,
                             order.begin() + static_cast<std::ptrdiff_t>(c + 1) * clique_size);
    std::sort(members.begin(), members.end());
    for (std::size_t a = 0; a < members.size(); ++a) {
      out.labels[static_cast<std::size_t>(members[a])] = 1;
      for (std::size_t b = a + 1; b < members.size(); ++b)
        if (!g.has_edge(members[a], members[b])) edges.emplace_back(members[a], members[b]);
    }
    out.cliques.push_back(std::move(members));
  }
  out.graph = Graph::from_edges(n, edges, g.labels());
  out.added_edges = out.graph.num_edges() - before;
  return out;
}

/// Checks a plan against `g` without applying it: budget, canonical order,
/// pair uniqueness, op validity and that no op leaves a node without edges.
/// Ops are replayed in order; throws InvalidOpError naming the offending pair.
inline Graph apply_perturbation(const Graph& g, const PerturbationPlan& plan) {
  if (plan.ops.size() > plan.budget)
    throw DataError("plan has " + std::to_string(plan.ops.size()) + " ops but budget " +
                    std::to_string(plan.budget));
  const int n = g.num_nodes();
  std::set<NodePair> seen;
  std::vector<int> degree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) degree[static_cast<std::size_t>(i)] = g.degree(i);

  std::vector<NodePair> toggles;
  toggles.reserve(plan.ops.size());
  for (const auto& op : plan.ops) {
    if (op.i < 0 || op.j >= n || op.i >= op.j) {
      const bool in_range = op.i >= 0 && op.i < n && op.j >= 0 && op.j < n;
      throw InvalidOpError(in_range ? g.label(op.i) : op.i, in_range ? g.label(op.j) : op.j,
                           "pair must satisfy 0 <= i < j < n");
    }
    const Label li = g.label(op.i), lj = g.label(op.j);
    if (!seen.insert(op.pair()).second) throw InvalidOpError(li, lj, "pair modified twice");
    const bool present = g.has_edge(op.i, op.j);
    if (op.kind == EdgeOpKind::Add) {
      if (present) throw InvalidOpError(li, lj, "add on existing edge");
      ++degree[static_cast<std::size_t>(op.i)];
      ++degree[static_cast<std::size_t>(op.j)];
    } else {
      if (!present) throw InvalidOpError(li, lj, "delete on non-edge");
      if (--degree[static_cast<std::size_t>(op.i)] == 0 || --degree[static_cast<std::size_t>(op.j)] == 0)
        throw InvalidOpError(li, lj, "delete would isolate a node");
    }
    toggles.push_back(op.pair());
  }
  return g.with_toggled(toggles);
}

/// Plan that turns `from` into `to`: additions first, then deletions, each
/// ascending. This order never isolates a node unless `to` has one.
inline PerturbationPlan diff_plan(const Graph& from, const Graph& to) {
  if (from.num_nodes() != to.num_nodes()) throw DataError("diff_plan: node counts differ");
  PerturbationPlan plan;
  std::vector<EdgeOp> dels;
  for (int i = 0; i < from.num_nodes(); ++i) {
    auto a = from.neighbors(i);
    auto b = to.neighbors(i);
    std::vector<int> added, removed;
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(added));
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(removed));
    for (int j : added)
      if (j > i) plan.ops.push_back({i, j, EdgeOpKind::Add});
    for (int j : removed)
      if (j > i) dels.push_back({i, j, EdgeOpKind::Delete});
  }
  plan.ops.insert(plan.ops.end(), dels.begin(), dels.end());
  plan.budget = plan.ops.size();
  return plan;
}

}  // namespace gadlab
