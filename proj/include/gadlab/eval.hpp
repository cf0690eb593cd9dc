#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gadlab/error.hpp"
#include "gadlab/lgcn.hpp"
#include "gadlab/oddball.hpp"
#include "gadlab/parallel.hpp"
#include "gadlab/rng.hpp"

namespace gadlab {

/// Relative decrease of the summed target scores.
inline double tau_as(double S0, double SB) {
  if (!(S0 > 0.0)) throw DataError("tau_as: clean score sum must be > 0");
  return (S0 - SB) / S0;
}

/// Midranks (1-based) of `v`; tied values share the mean of their positions.
inline std::vector<double> midranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t e = k;
    while (e + 1 < order.size() && v[order[e + 1]] == v[order[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t q = k; q <= e; ++q) rank[order[q]] = r;
    k = e + 1;
  }
  return rank;
}

/// Rank-based ROC AUC (Mann-Whitney), ties counted one half.
inline double auc_score(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("auc_score: length mismatch");
  double pos = 0.0, neg = 0.0;
  for (int l : labels) {
    if (l == 1) pos += 1.0;
    else if (l == 0) neg += 1.0;
    else throw DataError("auc_score: labels must be 0 or 1");
  }
  if (pos == 0.0 || neg == 0.0) throw DataError("auc_score: both classes must be present");
  for (double s : scores)
    if (std::isnan(s)) throw DataError("auc_score: NaN score");
  const auto r = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (labels[i] == 1) rank_sum += r[i];
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

struct PermTestResult {
  double t0 = 0.0;
  double p_value = 1.0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::size_t exceed = 0;  // #{t_j >= t0}
};

/// Two-sample permutation test on |mean(x) - mean(y)|. Each of the M trials
/// reassigns the pooled values to groups of the original sizes uniformly at
/// random. Trials run in fixed-size seeded chunks, so the p-value does not
/// depend on the worker count.
inline PermTestResult permutation_test(std::span<const double> x, std::span<const double> y, std::size_t M,
                                       std::uint64_t seed) {
  if (x.empty() || y.empty()) throw DataError("permutation_test: both samples must be nonempty");
  if (M == 0) throw UsageError("permutation_test: M must be >= 1");
  std::vector<double> pool(x.begin(), x.end());
  pool.insert(pool.end(), y.begin(), y.end());
  const std::size_t nx = x.size(), n = pool.size();
  const std::size_t small = std::min(nx, n - nx);
  const bool small_is_x = small == nx;
  double total = 0.0, mag = 0.0;
  for (double v : pool) {
    total += v;
    mag = std::max(mag, std::abs(v));
  }
  auto statistic = [&](double small_sum) {
    const double big_sum = total - small_sum;
    const double sx = small_is_x ? small_sum : big_sum;
    return std::abs(sx / static_cast<double>(nx) - (total - sx) / static_cast<double>(n - nx));
  };
  double sx = 0.0, sy = 0.0;
  for (double v : x) sx += v;
  for (double v : y) sy += v;
  PermTestResult res;
  res.M = M;
  res.seed = seed;
  res.t0 = std::abs(sx / static_cast<double>(nx) - sy / static_cast<double>(n - nx));
  // Statistics that equal t0 up to summation-order rounding count as exceeding it.
  const double slack = 1e-12 * std::max(mag, 1.0);

  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (M + kChunk - 1) / kChunk;
  std::vector<std::size_t> counts(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    std::vector<double> buf = pool;
    const std::size_t trials = std::min(kChunk, M - c * kChunk);
    std::size_t hit = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i < small; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(buf[i], buf[pick(rng)]);
        s += buf[i];
      }
      if (statistic(s) >= res.t0 - slack) ++hit;
    }
    counts[c] = hit;
  });
  for (std::size_t c : counts) res.exceed += c;
  res.p_value = static_cast<double>(res.exceed) / static_cast<double>(M);
  return res;
}

struct FeatureShift {
  PermTestResult N;
  PermTestResult E;
};

inline FeatureShift feature_shift_report(const EgonetFeatures& clean, const EgonetFeatures& poisoned, std::size_t M,
                                         std::uint64_t seed) {
  if (clean.size() != poisoned.size()) throw DataError("feature_shift_report: node counts differ");
  return {permutation_test(clean.N, poisoned.N, M, seed), permutation_test(clean.E, poisoned.E, M, derive_seed(seed, 1))};
}

/// Test AUC of an LGCN refitted on `g` with the problem's training labels,
/// scored on `nodes` against the true labels `y`.
inline double lgcn_auc(const Graph& g, const LgcnProblem& prob, std::span<const int> nodes, const std::vector<int>& y) {
  const auto op = normalized_adjacency(g);
  const auto z = predict(rwls_fit(op, prob.X, prob.train, prob.omega, prob.xi), op, prob.X);
  std::vector<double> s;
  std::vector<int> l;
  for (int v : nodes) {
    s.push_back(z(v));
    l.push_back(y[static_cast<std::size_t>(v)]);
  }
  return auc_score(s, l);
}

struct MetricRow {
  std::string method;
  std::size_t budget = 0;
  double tau_as = std::nan("");
  double auc = std::nan("");
  double p_N = std::nan("");
  double p_E = std::nan("");
};

/// CSV with header method,budget,tau_as,auc,p_N,p_E; missing values are empty cells.
inline std::string format_metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "method,budget,tau_as,auc,p_N,p_E\n";
  auto cell = [&](double v) {
    out += ',';
    if (std::isnan(v)) return;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (const auto& r : rows) {
    out += r.method;
    out += ',';
    out += std::to_string(r.budget);
    cell(r.tau_as);
    cell(r.auc);
    cell(r.p_N);
    cell(r.p_E);
    out += '\n';
  }
  return out;
}

}  // namespace gadlab
