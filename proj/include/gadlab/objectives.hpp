#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/lgcn.hpp"
#include "gadlab/oddball.hpp"

namespace gadlab {

/// Scalar attack objective (minimised) over the adjacency matrix.
///
/// Gradients are taken with respect to the value a_ij shared by the two
/// symmetric entries of each listed pair, so one pair accumulates the
/// contributions of both (i,j) and (j,i). Binary evaluation works on a Graph;
/// relaxed evaluation takes a dense symmetric matrix with zero diagonal and
/// entries in [0,1].
class AttackObjective {
 public:
  virtual ~AttackObjective() = default;

  virtual std::string name() const = 0;

  virtual double value(const Graph& g) const = 0;
  virtual double value_and_gradient(const Graph& g, std::span<const NodePair> pairs, std::span<double> grad) const = 0;

  virtual double relaxed_value(const Eigen::MatrixXd& A) const = 0;
  virtual double relaxed_value_and_gradient(const Eigen::MatrixXd& A, std::span<const NodePair> pairs,
                                            std::span<double> grad) const = 0;
};

inline Eigen::MatrixXd dense_adjacency(const Graph& g) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.neighbors(i)) A(i, j) = 1.0;
  return A;
}

/// Partial derivatives of the OddBall surrogate with respect to the feature
/// vectors, treating N and E as independent inputs.
struct OddballPartials {
  double value = 0.0;
  std::vector<double> dN;
  std::vector<double> dE;
};

/// Surrogate value and its partials. ln N and ln E use max(., 1) so they stay
/// defined on relaxed inputs; this is the identity on valid binary graphs.
inline OddballPartials oddball_partials(const std::vector<double>& N, const std::vector<double>& E, const TargetSet& targets) {
  const std::size_t n = N.size();
  std::vector<double> x(n), y(n), dx(n), dy(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = N[k] >= 1.0 ? std::log(N[k]) : 0.0;
    dx[k] = N[k] >= 1.0 ? 1.0 / N[k] : 0.0;
    y[k] = E[k] >= 1.0 ? std::log(E[k]) : 0.0;
    dy[k] = E[k] >= 1.0 ? 1.0 / E[k] : 0.0;
  }
  const PowerLawFit fit = fit_line(x, y);

  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) sxx += (x[k] - mx) * (x[k] - mx);

  OddballPartials out;
  out.dN.assign(n, 0.0);
  out.dE.assign(n, 0.0);
  std::vector<double> gx(n, 0.0);
  double g_b0 = 0.0, g_b1 = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto v = static_cast<std::size_t>(targets.nodes[t]);
    const double kappa = targets.weight(t);
    const double pred = std::exp(fit.beta0 + fit.beta1 * x[v]);
    const double r = E[v] - pred;
    out.value += kappa * r * r;
    out.dE[v] += 2.0 * kappa * r;
    const double g_pred = -2.0 * kappa * r * pred;  // d/d(beta0 + beta1 x_v)
    g_b0 += g_pred;
    g_b1 += g_pred * x[v];
    gx[v] += g_pred * fit.beta1;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double cx = x[k] - mx;
    const double db1_dy = cx / sxx;
    const double db0_dy = inv_n - mx * db1_dy;
    const double db1_dx = ((y[k] - my) - 2.0 * fit.beta1 * cx) / sxx;
    const double db0_dx = -fit.beta1 * inv_n - mx * db1_dx;
    const double gy = g_b0 * db0_dy + g_b1 * db1_dy;
    gx[k] += g_b0 * db0_dx + g_b1 * db1_dx;
    out.dN[k] = gx[k] * dx[k];
    out.dE[k] += gy * dy[k];
  }
  return out;
}

/// Sum over targets of (E_i - e^beta0 N_i^beta1)^2 with the power law refitted
/// on the evaluated adjacency.
class OddballSurrogateObjective final : public AttackObjective {
 public:
  explicit OddballSurrogateObjective(TargetSet targets) : targets_(std::move(targets)) {}

  std::string name() const override { return "oddball"; }
  const TargetSet& targets() const { return targets_; }

  double value(const Graph& g) const override {
    targets_.validate(g.num_nodes());
    std::vector<double> N, E;
    binary_features(g, N, E);
    return oddball_partials(N, E, targets_).value;
  }

  double value_and_gradient(const Graph& g, std::span<const NodePair> pairs, std::span<double> grad) const override {
    targets_.validate(g.num_nodes());
    if (grad.size() != pairs.size()) throw DataError("gradient buffer size mismatch");
    std::vector<double> N, E;
    binary_features(g, N, E);
    const auto part = oddball_partials(N, E, targets_);

    // d/da_ij = c_i + c_j + (dE_i + dE_j) (A^2)_ij + (A diag(dE) A)_ij
    const std::size_t n = N.size();
    std::vector<double> common(n, 0.0), weighted(n, 0.0);
    std::vector<int> touched;
    int row = -1;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      if (i != row) {
        for (int t : touched) common[static_cast<std::size_t>(t)] = weighted[static_cast<std::size_t>(t)] = 0.0;
        touched.clear();
        row = i;
        for (int mid : g.neighbors(i))
          for (int far : g.neighbors(mid)) {
            if (common[static_cast<std::size_t>(far)] == 0.0) touched.push_back(far);
            common[static_cast<std::size_t>(far)] += 1.0;
            weighted[static_cast<std::size_t>(far)] += part.dE[static_cast<std::size_t>(mid)];
          }
      }
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      grad[k] = part.dN[ui] + part.dE[ui] + part.dN[uj] + part.dE[uj] +
                (part.dE[ui] + part.dE[uj]) * common[uj] + weighted[uj];
    }
    return part.value;
  }

  double relaxed_value(const Eigen::MatrixXd& A) const override {
    targets_.validate(static_cast<int>(A.rows()));
    Eigen::MatrixXd A2 = A * A;
    std::vector<double> N, E;
    relaxed_features(A, A2, N, E);
    return oddball_partials(N, E, targets_).value;
  }

  double relaxed_value_and_gradient(const Eigen::MatrixXd& A, std::span<const NodePair> pairs,
                                    std::span<double> grad) const override {
    targets_.validate(static_cast<int>(A.rows()));
    if (grad.size() != pairs.size()) throw DataError("gradient buffer size mismatch");
    Eigen::MatrixXd A2 = A * A;
    std::vector<double> N, E;
    relaxed_features(A, A2, N, E);
    const auto part = oddball_partials(N, E, targets_);
    const Eigen::Map<const Eigen::VectorXd> dE(part.dE.data(), static_cast<Eigen::Index>(part.dE.size()));
    Eigen::MatrixXd ADA = A * dE.asDiagonal();
    Eigen::MatrixXd B = ADA * A;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      grad[k] = part.dN[ui] + part.dE[ui] + part.dN[uj] + part.dE[uj] + (part.dE[ui] + part.dE[uj]) * A2(i, j) + B(i, j);
    }
    return part.value;
  }

 private:
  static void binary_features(const Graph& g, std::vector<double>& N, std::vector<double>& E) {
    const auto tri = triangles_per_node(g);
    const auto n = static_cast<std::size_t>(g.num_nodes());
    N.resize(n);
    E.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      N[k] = g.degree(static_cast<int>(k));
      E[k] = N[k] + static_cast<double>(tri[k]);
    }
  }

  static void relaxed_features(const Eigen::MatrixXd& A, const Eigen::MatrixXd& A2, std::vector<double>& N,
                               std::vector<double>& E) {
    const auto n = static_cast<std::size_t>(A.rows());
    N.resize(n);
    E.resize(n);
    const Eigen::VectorXd deg = A.rowwise().sum();
    const Eigen::VectorXd cube = A2.cwiseProduct(A).rowwise().sum();  // (A^3)_ii for symmetric A
    for (std::size_t k = 0; k < n; ++k) {
      N[k] = deg(static_cast<Eigen::Index>(k));
      E[k] = N[k] + 0.5 * cube(static_cast<Eigen::Index>(k));
    }
  }

  TargetSet targets_;
};

/// Negated split R-BCE of the LGCN surrogate refitted on the evaluated adjacency.
/// Degrees are clamped below at 1 for relaxed inputs (no-op on valid graphs).
class LgcnAttackObjective final : public AttackObjective {
 public:
  explicit LgcnAttackObjective(LgcnProblem problem) : prob_(std::move(problem)) {
    if (!(prob_.h >= 0.0 && prob_.h <= 1.0)) throw UsageError("mixing weight h must lie in [0, 1]");
  }

  std::string name() const override { return "lgcn"; }
  const LgcnProblem& problem() const { return prob_; }

  double value(const Graph& g) const override { return evaluate(binary_matrix(g), {}, {}); }

  double value_and_gradient(const Graph& g, std::span<const NodePair> pairs, std::span<double> grad) const override {
    return evaluate(binary_matrix(g), pairs, grad);
  }

  double relaxed_value(const Eigen::MatrixXd& A) const override {
    return evaluate(SparseMatrix(A.sparseView()), {}, {});
  }

  double relaxed_value_and_gradient(const Eigen::MatrixXd& A, std::span<const NodePair> pairs,
                                    std::span<double> grad) const override {
    return evaluate(SparseMatrix(A.sparseView()), pairs, grad);
  }

 private:
  static SparseMatrix binary_matrix(const Graph& g) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * g.num_edges());
    for (int i = 0; i < g.num_nodes(); ++i)
      for (int j : g.neighbors(i)) trip.emplace_back(i, j, 1.0);
    SparseMatrix A(g.num_nodes(), g.num_nodes());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  double evaluate(const SparseMatrix& A, std::span<const NodePair> pairs, std::span<double> grad) const {
    if (grad.size() != pairs.size()) throw DataError("gradient buffer size mismatch");
    const Eigen::Index n = A.rows();

    Eigen::VectorXd s(n);
    std::vector<bool> active(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = A.row(i).sum();
      active[static_cast<std::size_t>(i)] = d >= 1.0;
      s(i) = 1.0 / std::sqrt(std::max(d, 1.0));
    }
    SparseMatrix At = A;
    for (Eigen::Index i = 0; i < n; ++i)
      for (SparseMatrix::InnerIterator it(At, i); it; ++it) it.valueRef() *= s(i) * s(it.col());
    {
      SparseMatrix diag(n, n);
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, s(i) * s(i));
      diag.setFromTriplets(trip.begin(), trip.end());
      At += diag;
    }

    const LgcnForward fw = lgcn_forward(At, prob_);
    const double value = -fw.loss.total();
    if (!std::isfinite(value)) throw NumericalError("LGCN attack objective is not finite");
    if (pairs.empty()) return value;

    // Adjoint of the loss w.r.t. the logits u = P W.
    Eigen::VectorXd gu = Eigen::VectorXd::Zero(n);
    auto accumulate = [&](const LabeledNodes& part, double scale) {
      for (std::size_t k = 0; k < part.size(); ++k) {
        const int v = part.nodes[k];
        const double z = fw.z(v);
        if (z < kScoreClamp || z > 1.0 - kScoreClamp) continue;
        gu(v) += scale * (part.y[k] == 1 ? -prob_.omega * (1.0 - z) : z);
      }
    };
    accumulate(prob_.train, prob_.h);
    accumulate(prob_.test_pseudo, 1.0 - prob_.h);

    const Eigen::VectorXd& W = fw.fit.W;
    const Eigen::VectorXd gW = fw.P.transpose() * gu;
    const Eigen::VectorXd v = fw.factor.solve(gW);

    // dLoss/dP: direct path through the logits plus the path through W*.
    Eigen::MatrixXd GP = gu * W.transpose();
    const Eigen::VectorXd Pv = fw.P * v;
    for (std::size_t r = 0; r < prob_.train.size(); ++r) {
      const int node = prob_.train.nodes[r];
      const double w = fw.fit.row_weights(static_cast<Eigen::Index>(r));
      const double resid = prob_.train.y[r] - fw.P.row(node).dot(W);
      GP.row(node) += w * (resid * v.transpose() - Pv(node) * W.transpose());
    }
    // dLoss/dA_tilde = GP Q^T + A_tilde GP X^T
    const Eigen::MatrixXd H = At * GP;
    Eigen::MatrixXd G = GP * fw.Q.transpose();
    G.noalias() += H * prob_.X.transpose();

    // Degree path: A_tilde_kj = s_k (A + I)_kj s_j, s = d^-1/2.
    Eigen::VectorXd gd = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      double gs = 2.0 * G(k, k) * s(k);
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        const Eigen::Index j = it.col();
        gs += (G(k, j) + G(j, k)) * it.value() * s(j);
      }
      gd(k) = -0.5 * s(k) * s(k) * s(k) * gs;
    }

    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      const double dloss = s(i) * s(j) * (G(i, j) + G(j, i)) + gd(i) + gd(j);
      grad[k] = -dloss;
    }
    return value;
  }

  LgcnProblem prob_;
};

}  // namespace gadlab
