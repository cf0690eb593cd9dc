#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/objectives.hpp"
#include "gadlab/parallel.hpp"

namespace gadlab {

enum class CandidateMode { Full, Direct };

struct CandidateSet {
  std::vector<NodePair> pairs;
  CandidateMode mode = CandidateMode::Full;

  std::size_t size() const noexcept { return pairs.size(); }
};

/// Full: every pair i < j. Direct: pairs with at least one endpoint in
/// `targets`. Both in ascending (i, j) order.
inline CandidateSet build_candidates(const Graph& g, CandidateMode mode, std::span<const int> targets = {}) {
  const int n = g.num_nodes();
  CandidateSet c;
  c.mode = mode;
  if (mode == CandidateMode::Full) {
    c.pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(std::max(n - 1, 0)) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) c.pairs.emplace_back(i, j);
    return c;
  }
  if (targets.empty()) throw UsageError("direct candidate set needs at least one target");
  std::vector<char> is_target(static_cast<std::size_t>(n), 0);
  for (int t : targets) {
    if (t < 0 || t >= n) throw UsageError("target node out of range");
    is_target[static_cast<std::size_t>(t)] = 1;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (is_target[static_cast<std::size_t>(i)] || is_target[static_cast<std::size_t>(j)]) c.pairs.emplace_back(i, j);
  return c;
}

/// binarized(x) = +1 if x >= 0 else -1; the dummy variable is Z = -binarized(2 Zs - 1).
inline int dummy_from_soft(double zs) { return 2.0 * zs - 1.0 >= 0.0 ? -1 : 1; }

/// A = (A0 - 0.5) * Z + 0.5 on candidate pairs, A0 elsewhere: Z = -1 toggles the pair.
inline Graph flip_map(const Graph& A0, const CandidateSet& cand, std::span<const int> Z) {
  if (Z.size() != cand.size()) throw DataError("flip_map: one dummy value per candidate pair expected");
  std::vector<NodePair> toggles;
  for (std::size_t k = 0; k < Z.size(); ++k) {
    if (Z[k] != 1 && Z[k] != -1) throw DataError("flip_map: dummy values must be +1 or -1");
    if (Z[k] == -1) toggles.push_back(cand.pairs[k]);
  }
  return A0.with_toggled(toggles);
}

/// Relaxed flip map on a dense matrix: entries (A0 - 0.5) z + 0.5 for real z.
inline Eigen::MatrixXd flip_map_relaxed(const Graph& A0, const CandidateSet& cand, std::span<const double> z) {
  if (z.size() != cand.size()) throw DataError("flip_map: one dummy value per candidate pair expected");
  Eigen::MatrixXd A = dense_adjacency(A0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto [i, j] = cand.pairs[k];
    A(i, j) = A(j, i) = (A(i, j) - 0.5) * z[k] + 0.5;
  }
  return A;
}

struct AttackConfig {
  std::size_t budget = 0;
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1};
  double learning_rate = 0.1;
  int iterations = 200;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;  // continuous attack stopping rule on the step size

  void validate() const {
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be > 0");
    if (iterations < 1) throw UsageError("iterations must be >= 1");
    if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
    for (double l : lambda_grid)
      if (!(l > 0.0)) throw UsageError("lambda values must be > 0");
  }
};

namespace attack_detail {

/// Plan from a set of toggled pairs: additions first, then deletions, each in
/// the given order.
inline PerturbationPlan plan_from_toggles(const Graph& A0, std::span<const NodePair> toggles, std::size_t budget) {
  PerturbationPlan plan;
  plan.budget = budget;
  for (const auto& p : toggles)
    if (!A0.has_edge(p.i, p.j)) plan.ops.push_back({p.i, p.j, EdgeOpKind::Add});
  for (const auto& p : toggles)
    if (A0.has_edge(p.i, p.j)) plan.ops.push_back({p.i, p.j, EdgeOpKind::Delete});
  return plan;
}

/// Gradient infinity norm, 1 when degenerate.
inline double gradient_scale(std::span<const double> grad) {
  double s = 0.0;
  for (double v : grad) s = std::max(s, std::abs(v));
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

}  // namespace attack_detail

// ---------------------------------------------------------------- GradMax

struct GradMaxStep {
  NodePair pair;
  double gradient = 0.0;
  double objective_before = 0.0;
};

struct GradMaxResult {
  PerturbationPlan plan;
  std::vector<GradMaxStep> log;
  bool truncated = false;  // ran out of valid candidates before the budget
  double objective_clean = 0.0;
  double objective_final = 0.0;
};

/// Greedy single flips. Each step recomputes the gradient at the current
/// graph and takes the unvisited, sign-valid, non-isolating pair with the
/// largest |gradient| (first in candidate order on ties).
inline GradMaxResult gradmax_search(const AttackObjective& obj, const Graph& A0, const CandidateSet& cand,
                                    const AttackConfig& cfg) {
  GradMaxResult res;
  res.plan.budget = cfg.budget;
  Graph g = A0;
  std::vector<char> visited(cand.size(), 0);
  std::vector<double> grad(cand.size());
  res.objective_clean = obj.value(A0);
  res.objective_final = res.objective_clean;

  for (std::size_t step = 0; step < cfg.budget; ++step) {
    const double f = obj.value_and_gradient(g, cand.pairs, grad);
    if (!std::isfinite(f)) throw NumericalError("gradmax: objective is not finite at step " + std::to_string(step));
    std::size_t best = cand.size();
    double best_abs = 0.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (visited[k]) continue;
      const auto [i, j] = cand.pairs[k];
      const bool present = g.has_edge(i, j);
      if (present ? !(grad[k] > 0.0) : !(grad[k] < 0.0)) continue;
      if (present && (g.degree(i) <= 1 || g.degree(j) <= 1)) continue;
      const double a = std::abs(grad[k]);
      if (a > best_abs) {
        best_abs = a;
        best = k;
      }
    }
    if (best == cand.size()) {
      res.truncated = true;
      break;
    }
    const auto p = cand.pairs[best];
    visited[best] = 1;
    res.plan.ops.push_back({p.i, p.j, g.has_edge(p.i, p.j) ? EdgeOpKind::Delete : EdgeOpKind::Add});
    res.log.push_back({p, grad[best], f});
    const NodePair one[1] = {p};
    g = g.with_toggled(one);
  }
  if (!res.plan.empty()) res.objective_final = obj.value(g);
  return res;
}

// ------------------------------------------------------------- ContinuousA

struct ContinuousResult {
  std::vector<NodePair> ranked;  // accepted toggles, most changed first
  std::vector<double> delta;     // |relaxed - original| per ranked pair
  int iterations_run = 0;
  double relaxed_objective = 0.0;
  double objective_clean = 0.0;

  /// Top-b ranked toggles as a plan (adds first).
  PerturbationPlan plan_for(const Graph& A0, std::size_t b) const {
    const std::size_t take = std::min(b, ranked.size());
    return attack_detail::plan_from_toggles(A0, std::span(ranked).first(take), b);
  }
};

/// Projected gradient descent on the relaxed candidate entries (objective
/// scaled by its gradient norm at A0), then the largest deviations from A0
/// become flips. Ops that would leave a node without edges are skipped.
inline ContinuousResult continuous_attack(const AttackObjective& obj, const Graph& A0, const CandidateSet& cand,
                                          const AttackConfig& cfg) {
  cfg.validate();
  ContinuousResult res;
  const std::size_t m = cand.size();
  Eigen::MatrixXd A = dense_adjacency(A0);
  std::vector<double> a0(m), a(m), grad(m);
  for (std::size_t k = 0; k < m; ++k) a0[k] = a[k] = A(cand.pairs[k].i, cand.pairs[k].j);

  res.objective_clean = obj.relaxed_value_and_gradient(A, cand.pairs, grad);
  const double scale = attack_detail::gradient_scale(grad);
  for (int t = 0; t < cfg.iterations; ++t) {
    double step = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double next = std::clamp(a[k] - cfg.learning_rate * grad[k] / scale, 0.0, 1.0);
      step = std::max(step, std::abs(next - a[k]));
      a[k] = next;
      A(cand.pairs[k].i, cand.pairs[k].j) = A(cand.pairs[k].j, cand.pairs[k].i) = next;
    }
    res.iterations_run = t + 1;
    if (step < cfg.tolerance) {
      res.relaxed_objective = obj.relaxed_value(A);
      break;
    }
    res.relaxed_objective = obj.relaxed_value_and_gradient(A, cand.pairs, grad);
    if (!std::isfinite(res.relaxed_objective))
      throw NumericalError("continuous attack diverged at iteration " + std::to_string(t + 1));
  }
  if (!std::isfinite(res.relaxed_objective))
    throw NumericalError("continuous attack diverged at iteration " + std::to_string(res.iterations_run));

  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < m; ++k)
    if (std::abs(a[k] - a0[k]) > 0.0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return std::abs(a[x] - a0[x]) > std::abs(a[y] - a0[y]); });

  std::vector<int> degree(static_cast<std::size_t>(A0.num_nodes()));
  for (int i = 0; i < A0.num_nodes(); ++i) degree[static_cast<std::size_t>(i)] = A0.degree(i);
  for (std::size_t k : order) {
    if (res.ranked.size() >= cfg.budget) break;
    const auto p = cand.pairs[k];
    auto& di = degree[static_cast<std::size_t>(p.i)];
    auto& dj = degree[static_cast<std::size_t>(p.j)];
    if (a0[k] == 1.0) {
      if (di <= 1 || dj <= 1) continue;
      --di;
      --dj;
    } else {
      ++di;
      ++dj;
    }
    res.ranked.push_back(p);
    res.delta.push_back(std::abs(a[k] - a0[k]));
  }
  return res;
}

// ---------------------------------------------------------- BinarizedAttack

struct HistoryEntry {
  std::size_t lambda_index = 0;
  int iteration = 0;
  std::size_t flip_count = 0;
  double objective = 0.0;  // raw objective at the binary graph, no penalty
  bool isolates = false;
  std::vector<std::size_t> flipped;  // candidate indices with Z = -1
  std::vector<double> soft;          // their Zs values
};

struct BinarizedSelection {
  PerturbationPlan plan;
  double objective = 0.0;
  bool fallback = false;
};

struct BinarizedResult {
  std::vector<HistoryEntry> history;  // pooled: lambda order, then iteration
  HistoryEntry best_overall;          // lowest objective regardless of flips
  double objective_clean = 0.0;
  double gradient_scale = 1.0;

  /// Lowest-objective recorded state with flip_count <= b and no isolated
  /// node; earliest entry on ties. Without one, the best overall state's
  /// flips are truncated by descending Zs, skipping isolating ops.
  BinarizedSelection select(const Graph& A0, const CandidateSet& cand, std::size_t b) const {
    BinarizedSelection sel;
    const HistoryEntry* pick = nullptr;
    for (const auto& e : history) {
      if (e.flip_count > b || e.isolates) continue;
      if (!pick || e.objective < pick->objective) pick = &e;
    }
    std::vector<NodePair> toggles;
    if (pick) {
      sel.objective = pick->objective;
      for (std::size_t k : pick->flipped) toggles.push_back(cand.pairs[k]);
      sel.plan = attack_detail::plan_from_toggles(A0, toggles, b);
      return sel;
    }
    sel.fallback = true;
    std::vector<std::size_t> order(best_overall.flipped.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return best_overall.soft[x] > best_overall.soft[y]; });
    std::vector<int> degree(static_cast<std::size_t>(A0.num_nodes()));
    for (int i = 0; i < A0.num_nodes(); ++i) degree[static_cast<std::size_t>(i)] = A0.degree(i);
    for (std::size_t o : order) {
      if (toggles.size() >= b) break;
      const auto p = cand.pairs[best_overall.flipped[o]];
      auto& di = degree[static_cast<std::size_t>(p.i)];
      auto& dj = degree[static_cast<std::size_t>(p.j)];
      if (A0.has_edge(p.i, p.j)) {
        if (di <= 1 || dj <= 1) continue;
        --di;
        --dj;
      } else {
        ++di;
        ++dj;
      }
      toggles.push_back(p);
    }
    sel.plan = attack_detail::plan_from_toggles(A0, toggles, b);
    sel.objective = std::numeric_limits<double>::quiet_NaN();
    return sel;
  }
};

/// Projected gradient descent on soft variables Zs in [0,1] with a LASSO
/// penalty, evaluated at the binary graph given by the dummy variables and
/// differentiated with the straight-through rule dZ/dZs = -2. Each step is
/// normalised so that the fastest Zs component that is not pinned at a bound
/// moves by the learning rate. One run of `iterations` updates per lambda;
/// histories are pooled. Only states with at most `cfg.budget` flips are
/// retained for selection.
inline BinarizedResult binarized_attack(const AttackObjective& obj, const Graph& A0, const CandidateSet& cand,
                                        const AttackConfig& cfg) {
  cfg.validate();
  const std::size_t m = cand.size();
  BinarizedResult res;
  std::vector<double> sign(m);  // dA/dZs = 1 - 2 A0
  for (std::size_t k = 0; k < m; ++k) sign[k] = A0.has_edge(cand.pairs[k].i, cand.pairs[k].j) ? -1.0 : 1.0;
  {
    std::vector<double> g0(m);
    res.objective_clean = obj.value_and_gradient(A0, cand.pairs, g0);
    res.gradient_scale = attack_detail::gradient_scale(g0);
  }
  const double scale = res.gradient_scale;

  struct Member {
    std::vector<HistoryEntry> kept;
    HistoryEntry best;
    bool has_best = false;
  };
  std::vector<Member> members(cfg.lambda_grid.size());

  parallel_for(cfg.lambda_grid.size(), [&](std::size_t li) {
    const double lambda = cfg.lambda_grid[li];
    Member& mem = members[li];
    std::vector<double> zs(m, 0.0), grad(m);
    std::vector<NodePair> toggles;
    for (int t = 0; t <= cfg.iterations; ++t) {
      HistoryEntry e;
      e.lambda_index = li;
      e.iteration = t;
      toggles.clear();
      for (std::size_t k = 0; k < m; ++k) {
        if (dummy_from_soft(zs[k]) == -1) {
          e.flipped.push_back(k);
          e.soft.push_back(zs[k]);
          toggles.push_back(cand.pairs[k]);
        }
      }
      e.flip_count = e.flipped.size();
      const Graph g = A0.with_toggled(toggles);
      e.isolates = g.has_isolated_node();
      const bool last = t == cfg.iterations;
      e.objective = last ? obj.value(g) : obj.value_and_gradient(g, cand.pairs, grad);
      if (!std::isfinite(e.objective))
        throw NumericalError("binarized attack: objective is not finite at iteration " + std::to_string(t));
      if (!e.isolates && (!mem.has_best || e.objective < mem.best.objective)) {
        mem.best = e;
        mem.has_best = true;
      }
      if (e.flip_count <= cfg.budget) mem.kept.push_back(std::move(e));
      if (last) break;
      // Normalise by the largest component that can still move Zs.
      double step_scale = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = sign[k] * grad[k];
        if ((d > 0.0 && zs[k] > 0.0) || (d < 0.0 && zs[k] < 1.0)) step_scale = std::max(step_scale, std::abs(d));
      }
      if (!(step_scale > 0.0)) step_scale = scale;
      for (std::size_t k = 0; k < m; ++k)
        zs[k] = std::clamp(zs[k] - cfg.learning_rate * (sign[k] * grad[k] / step_scale + lambda), 0.0, 1.0);
    }
  });

  bool have_best = false;
  for (auto& mem : members) {
    if (mem.has_best && (!have_best || mem.best.objective < res.best_overall.objective)) {
      res.best_overall = mem.best;
      have_best = true;
    }
    for (auto& e : mem.kept) res.history.push_back(std::move(e));
  }
  return res;
}

}  // namespace gadlab
