#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/oddball.hpp"
#include "gadlab/rng.hpp"

namespace gadlab {

inline double huber_loss(double t, double k) {
  if (!(k > 0.0)) throw UsageError("huber threshold k must be > 0");
  const double a = std::abs(t);
  return a <= k ? 0.5 * t * t : k * a - 0.5 * k * k;
}

/// First derivative of huber_loss in t.
inline double huber_derivative(double t, double k) {
  if (!(k > 0.0)) throw UsageError("huber threshold k must be > 0");
  return std::clamp(t, -k, k);
}

struct RobustFitConfig {
  double k = 1.0;
  int ransac_iters = 1000;
  double inlier_tol = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(k > 0.0)) throw UsageError("huber threshold k must be > 0");
    if (ransac_iters < 1) throw UsageError("ransac iterations must be >= 1");
    if (!(inlier_tol > 0.0)) throw UsageError("inlier tolerance must be > 0");
  }
};

struct HuberTrace {
  PowerLawFit fit;
  int iterations = 0;
  std::vector<double> objective;  // Huber objective after each IRLS step, index 0 = OLS start
};

inline double huber_objective(std::span<const double> x, std::span<const double> y, const PowerLawFit& f, double k) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += huber_loss(y[i] - f.beta0 - f.beta1 * x[i], k);
  return s;
}

/// Huber regression of y on x by IRLS from the OLS start. Weights are 1 inside
/// the threshold and k/|r| outside. Stops once both coefficients move by less
/// than 1e-8, or after 100 steps.
inline HuberTrace huber_line(std::span<const double> x, std::span<const double> y, double k) {
  if (!(k > 0.0)) throw UsageError("huber threshold k must be > 0");
  HuberTrace tr;
  tr.fit = fit_line(x, y);
  tr.objective.push_back(huber_objective(x, y, tr.fit, k));
  std::vector<double> w(x.size());
  for (int it = 0; it < 100; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = std::abs(y[i] - tr.fit.beta0 - tr.fit.beta1 * x[i]);
      w[i] = r <= k ? 1.0 : k / r;
    }
    const PowerLawFit next = fit_line(x, y, w);
    const double change = std::max(std::abs(next.beta0 - tr.fit.beta0), std::abs(next.beta1 - tr.fit.beta1));
    tr.fit = next;
    tr.iterations = it + 1;
    tr.objective.push_back(huber_objective(x, y, tr.fit, k));
    if (change < 1e-8) break;
  }
  return tr;
}

inline PowerLawFit huber_fit(const EgonetFeatures& f, double k = 1.0) {
  std::vector<double> lnN, lnE;
  log_features(f, lnN, lnE);
  return huber_line(lnN, lnE, k).fit;
}

struct RansacTrace {
  PowerLawFit fit;
  std::vector<std::size_t> consensus;  // indices of the final inlier set
  std::vector<std::size_t> best_size;  // best consensus size after each iteration
};

/// RANSAC line fit: 2-point hypotheses, inliers within `inlier_tol`, OLS refit
/// on the largest consensus set (first found on ties). Sequential and seeded.
inline RansacTrace ransac_line(std::span<const double> x, std::span<const double> y, const RobustFitConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.size();
  if (n < 2) throw DataError("ransac needs at least 2 points");
  Rng rng = make_rng(cfg.seed, 0x5ac);
  std::uniform_int_distribution<std::size_t> first(0, n - 1), second(0, n - 2);
  RansacTrace tr;
  std::vector<std::size_t> inliers;
  for (int it = 0; it < cfg.ransac_iters; ++it) {
    const std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    const double dx = x[b] - x[a];
    if (dx != 0.0) {
      const double slope = (y[b] - y[a]) / dx;
      const double icpt = y[a] - slope * x[a];
      inliers.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(y[i] - icpt - slope * x[i]) <= cfg.inlier_tol) inliers.push_back(i);
      if (inliers.size() > tr.consensus.size()) tr.consensus = inliers;
    }
    tr.best_size.push_back(tr.consensus.size());
  }
  if (tr.consensus.size() < 2) throw SingularDesignError("ransac found no usable consensus set");
  std::vector<double> cx, cy;
  for (std::size_t i : tr.consensus) {
    cx.push_back(x[i]);
    cy.push_back(y[i]);
  }
  tr.fit = fit_line(cx, cy);
  return tr;
}

inline PowerLawFit ransac_fit(const EgonetFeatures& f, const RobustFitConfig& cfg = {}) {
  std::vector<double> lnN, lnE;
  log_features(f, lnN, lnE);
  return ransac_line(lnN, lnE, cfg).fit;
}

enum class RobustMethod { None, Huber, Ransac };

inline RobustMethod parse_robust_method(const std::string& s) {
  if (s == "none") return RobustMethod::None;
  if (s == "huber") return RobustMethod::Huber;
  if (s == "ransac") return RobustMethod::Ransac;
  throw UsageError("unknown robust method '" + s + "' (expected none, huber or ransac)");
}

/// OddBall scores with the power law estimated by a robust method.
inline AnomalyReport robust_anomaly_scores(const Graph& g, RobustMethod method, const RobustFitConfig& cfg = {}) {
  const auto f = egonet_features(g);
  switch (method) {
    case RobustMethod::Huber:
      return anomaly_scores(f, huber_fit(f, cfg.k));
    case RobustMethod::Ransac:
      return anomaly_scores(f, ransac_fit(f, cfg));
    case RobustMethod::None:
      break;
  }
  return anomaly_scores(f, fit_power_law_ols(f));
}

/// Median position of the targets in `r.ranking` (0 = most anomalous).
inline double median_target_rank(const AnomalyReport& r, const TargetSet& targets) {
  if (targets.nodes.empty()) throw UsageError("target set is empty");
  const auto rank = r.rank_of();
  std::vector<double> v;
  for (int t : targets.nodes) v.push_back(rank[static_cast<std::size_t>(t)]);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace gadlab
