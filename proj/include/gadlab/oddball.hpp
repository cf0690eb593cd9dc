#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/rng.hpp"

namespace gadlab {

/// Per-node egonet features: N = degree, E = edges inside the egonet
/// (degree plus triangles through the node). Values are exact integers.
struct EgonetFeatures {
  std::vector<double> N;
  std::vector<double> E;

  std::size_t size() const noexcept { return N.size(); }
};

/// Log-log regression line ln E = beta0 + beta1 ln N.
struct PowerLawFit {
  double beta0 = 0.0;
  double beta1 = 0.0;

  double predict(double n) const { return std::exp(beta0 + beta1 * std::log(n)); }
};

struct AnomalyReport {
  std::vector<double> scores;
  std::vector<int> ranking;  // node indices, most anomalous first

  /// rank_of[v] = position of v in ranking (0 = top).
  std::vector<int> rank_of() const {
    std::vector<int> r(ranking.size());
    for (std::size_t k = 0; k < ranking.size(); ++k) r[static_cast<std::size_t>(ranking[k])] = static_cast<int>(k);
    return r;
  }
};

struct TargetSet {
  std::vector<int> nodes;
  std::vector<double> weights;  // kappa per node; empty means all 1

  double weight(std::size_t k) const { return weights.empty() ? 1.0 : weights[k]; }
  std::size_t size() const noexcept { return nodes.size(); }

  void validate(int n) const {
    if (nodes.empty()) throw UsageError("target set is empty");
    if (!weights.empty() && weights.size() != nodes.size()) throw UsageError("target weights do not match targets");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] < 0 || nodes[k] >= n) throw UsageError("target node out of range");
      if (weight(k) <= 0.0) throw UsageError("target weights must be positive");
    }
  }
};

/// Triangles through each node, by edge-wise neighbourhood intersection.
inline std::vector<long long> triangles_per_node(const Graph& g) {
  std::vector<long long> tri(static_cast<std::size_t>(g.num_nodes()), 0);
  for (int u = 0; u < g.num_nodes(); ++u) {
    auto nu = g.neighbors(u);
    for (int v : nu) {
      if (v <= u) continue;
      auto nv = g.neighbors(v);
      // Count w > v in both lists; each triangle u < v < w is visited once.
      auto a = std::upper_bound(nu.begin(), nu.end(), v);
      auto b = std::upper_bound(nv.begin(), nv.end(), v);
      while (a != nu.end() && b != nv.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++tri[static_cast<std::size_t>(u)];
          ++tri[static_cast<std::size_t>(v)];
          ++tri[static_cast<std::size_t>(*a)];
          ++a;
          ++b;
        }
      }
    }
  }
  return tri;
}

inline EgonetFeatures egonet_features(const Graph& g) {
  const auto tri = triangles_per_node(g);
  EgonetFeatures f;
  f.N.resize(tri.size());
  f.E.resize(tri.size());
  for (int i = 0; i < g.num_nodes(); ++i) {
    const int d = g.degree(i);
    if (d == 0) throw DataError("node " + std::to_string(g.label(i)) + " is isolated; egonet features need degree >= 1");
    f.N[static_cast<std::size_t>(i)] = d;
    f.E[static_cast<std::size_t>(i)] = static_cast<double>(d + tri[static_cast<std::size_t>(i)]);
  }
  return f;
}

/// Least-squares line y = beta0 + beta1 x, optionally weighted. Solves the
/// 2x2 normal equations in centred form.
inline PowerLawFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size()))
    throw DataError("fit_line: length mismatch");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  double xmin = INFINITY, xmax = -INFINITY;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double wk = w.empty() ? 1.0 : w[k];
    if (wk <= 0.0) continue;
    sw += wk;
    sx += wk * x[k];
    sy += wk * y[k];
    xmin = std::min(xmin, x[k]);
    xmax = std::max(xmax, x[k]);
  }
  if (!(xmax > xmin)) throw SingularDesignError("regression design is singular: fewer than two distinct regressor values");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double wk = w.empty() ? 1.0 : w[k];
    if (wk <= 0.0) continue;
    const double dx = x[k] - mx;
    sxx += wk * dx * dx;
    sxy += wk * dx * (y[k] - my);
  }
  PowerLawFit fit;
  fit.beta1 = sxy / sxx;
  fit.beta0 = my - fit.beta1 * mx;
  if (!std::isfinite(fit.beta0) || !std::isfinite(fit.beta1)) throw NumericalError("fit_line: non-finite coefficients");
  return fit;
}

inline void log_features(const EgonetFeatures& f, std::vector<double>& lnN, std::vector<double>& lnE) {
  lnN.resize(f.size());
  lnE.resize(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!(f.N[k] > 0.0) || !(f.E[k] > 0.0)) throw DataError("egonet features must be positive");
    lnN[k] = std::log(f.N[k]);
    lnE[k] = std::log(f.E[k]);
  }
}

/// OLS estimate of the egonet density power law over all nodes.
inline PowerLawFit fit_power_law_ols(const EgonetFeatures& f) {
  std::vector<double> lnN, lnE;
  log_features(f, lnN, lnE);
  return fit_line(lnN, lnE);
}

/// Ratio-scaled log distance of (N_i, E_i) from the fitted line.
inline double anomaly_score(double E, double predicted) {
  const double hi = std::max(E, predicted), lo = std::min(E, predicted);
  return (hi / lo) * std::log(std::abs(E - predicted) + 1.0);
}

/// Descending by score, ties by ascending node index.
inline std::vector<int> rank_descending(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

inline AnomalyReport anomaly_scores(const EgonetFeatures& f, const PowerLawFit& fit) {
  if (!std::isfinite(fit.beta0) || !std::isfinite(fit.beta1)) throw NumericalError("anomaly_scores: fit is not finite");
  AnomalyReport r;
  r.scores.resize(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) r.scores[k] = anomaly_score(f.E[k], fit.predict(f.N[k]));
  r.ranking = rank_descending(r.scores);
  return r;
}

/// Full detector pass: features, OLS fit, scores.
inline AnomalyReport oddball(const Graph& g) {
  const auto f = egonet_features(g);
  return anomaly_scores(f, fit_power_law_ols(f));
}

/// Sum of target scores under a freshly fitted line.
inline double target_score_sum(const Graph& g, const TargetSet& targets) {
  const auto r = oddball(g);
  double s = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k)
    s += targets.weight(k) * r.scores[static_cast<std::size_t>(targets.nodes[k])];
  return s;
}

/// Attack surrogate: weighted squared residuals of the targets' E against a
/// power law refitted on `g` itself.
inline double surrogate_objective(const Graph& g, const TargetSet& targets) {
  targets.validate(g.num_nodes());
  const auto f = egonet_features(g);
  const auto fit = fit_power_law_ols(f);
  double s = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto v = static_cast<std::size_t>(targets.nodes[k]);
    const double r = f.E[v] - fit.predict(f.N[v]);
    s += targets.weight(k) * r * r;
  }
  return s;
}

/// Uniform sample of `count` nodes from the top `pool_size` of the ranking,
/// returned in ascending index order.
inline TargetSet pick_targets(const AnomalyReport& report, int pool_size, int count, std::uint64_t seed) {
  if (pool_size < 1 || static_cast<std::size_t>(pool_size) > report.ranking.size())
    throw UsageError("pick_targets: pool size must lie in [1, n]");
  if (count < 1 || count > pool_size) throw UsageError("pick_targets: count must lie in [1, pool size]");
  std::vector<int> pool(report.ranking.begin(), report.ranking.begin() + pool_size);
  Rng rng = make_rng(seed, 0x7a);
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, pool_size - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  TargetSet t;
  t.nodes.assign(pool.begin(), pool.begin() + count);
  std::sort(t.nodes.begin(), t.nodes.end());
  return t;
}

/// "node score rank" rows (original labels, 1-based rank) for the `top` most
/// anomalous nodes; top <= 0 writes every node.
inline std::string format_report(const Graph& g, const AnomalyReport& r, int top = 0) {
  const std::size_t rows = top > 0 ? std::min<std::size_t>(static_cast<std::size_t>(top), r.ranking.size()) : r.ranking.size();
  std::string out;
  char buf[64];
  for (std::size_t k = 0; k < rows; ++k) {
    const int v = r.ranking[k];
    std::snprintf(buf, sizeof buf, " %.17g %zu\n", r.scores[static_cast<std::size_t>(v)], k + 1);
    out += std::to_string(g.label(v));
    out += buf;
  }
  return out;
}

}  // namespace gadlab
