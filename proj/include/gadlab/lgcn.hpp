#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gadlab/error.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/rng.hpp"

namespace gadlab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Graph plus node attributes and binary anomaly labels.
struct AttributedDataset {
  Graph graph;
  Eigen::MatrixXd X;
  std::vector<int> y;

  void validate() const {
    if (X.rows() != graph.num_nodes()) throw DataError("attribute rows do not match node count");
    if (y.size() != static_cast<std::size_t>(graph.num_nodes())) throw DataError("label count does not match node count");
    if (!X.allFinite()) throw DataError("attributes contain non-finite values");
  }
};

/// Nodes with their (true or pseudo) binary labels, aligned by position.
struct LabeledNodes {
  std::vector<int> nodes;
  std::vector<int> y;

  std::size_t size() const noexcept { return nodes.size(); }
};

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Stratified random split: within each class a `test_fraction` share
/// (rounded, at least one node when the class has two or more) goes to test.
inline Split stratified_split(const std::vector<int>& y, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test fraction must lie in (0, 1)");
  Rng rng = make_rng(seed, 0x5b1);
  Split s;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(static_cast<int>(i));
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(members.size())));
    if (n_test == 0 && members.size() >= 2) n_test = 1;
    s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline LabeledNodes label_nodes(const std::vector<int>& nodes, const std::vector<int>& y) {
  LabeledNodes out;
  out.nodes = nodes;
  out.y.reserve(nodes.size());
  for (int v : nodes) out.y.push_back(y[static_cast<std::size_t>(v)]);
  return out;
}

enum class OmegaConvention {
  NegativeOverPositive,  // minority (anomalous) rows up-weighted
  PositiveOverNegative,
};

inline double class_weight(const std::vector<int>& y, OmegaConvention c = OmegaConvention::NegativeOverPositive) {
  const auto pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const auto neg = static_cast<double>(y.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("class weight needs both classes among training labels");
  return c == OmegaConvention::NegativeOverPositive ? neg / pos : pos / neg;
}

/// Symmetric-normalised propagation operator D^-1/2 (A + I) D^-1/2 where D
/// holds the degrees of A itself (no self-loop in the degree).
struct PropagationOperator {
  SparseMatrix A_tilde;

  Eigen::Index size() const { return A_tilde.rows(); }
};

inline PropagationOperator normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (g.degree(i) == 0) throw DataError("node " + std::to_string(g.label(i)) + " has degree 0; propagation operator undefined");
    s[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * g.num_edges() + static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double si = s[static_cast<std::size_t>(i)];
    trip.emplace_back(i, i, si * si);
    for (int j : g.neighbors(i)) trip.emplace_back(i, j, si * s[static_cast<std::size_t>(j)]);
  }
  PropagationOperator op;
  op.A_tilde.resize(n, n);
  op.A_tilde.setFromTriplets(trip.begin(), trip.end());
  return op;
}

struct LgcnFit {
  Eigen::VectorXd W;
  double xi = 0.1;
  double omega = 1.0;
  Eigen::VectorXd row_weights;  // omega^y per training row
};

namespace lgcn_detail {

inline void check_fit_inputs(const Eigen::MatrixXd& X, const LabeledNodes& train, double omega, double xi, Eigen::Index n) {
  if (!(xi > 0.0)) throw UsageError("ridge strength xi must be > 0");
  if (!(omega > 0.0)) throw UsageError("class weight omega must be > 0");
  if (X.rows() != n) throw DataError("attribute rows do not match operator size");
  if (!X.allFinite()) throw DataError("attributes contain non-finite values");
  if (train.nodes.size() != train.y.size()) throw DataError("training labels misaligned");
  if (train.nodes.empty()) throw DataError("no training nodes");
}

}  // namespace lgcn_detail

/// Closed-form solve of the ridge-regularised weighted normal equations on
/// the propagated features of an already computed P = A_tilde^2 X.
inline LgcnFit rwls_fit_propagated(const Eigen::MatrixXd& P, const LabeledNodes& train, double omega, double xi,
                                   Eigen::LLT<Eigen::MatrixXd>* factor_out = nullptr) {
  const Eigen::Index p = P.cols();
  const auto rows = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd M(rows, p);
  Eigen::VectorXd dy(rows);
  LgcnFit fit;
  fit.xi = xi;
  fit.omega = omega;
  fit.row_weights.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int v = train.nodes[static_cast<std::size_t>(r)];
    const int yr = train.y[static_cast<std::size_t>(r)];
    M.row(r) = P.row(v);
    fit.row_weights(r) = yr == 1 ? omega : 1.0;
    dy(r) = fit.row_weights(r) * yr;
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(p, p) * xi;
  K.noalias() += M.transpose() * fit.row_weights.asDiagonal() * M;
  Eigen::VectorXd b = M.transpose() * dy;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("RWLS system is not positive definite");
  fit.W = llt.solve(b);
  if (!fit.W.allFinite()) throw NumericalError("RWLS solve produced non-finite weights");
  if (factor_out) *factor_out = std::move(llt);
  return fit;
}

inline Eigen::MatrixXd propagate_twice(const PropagationOperator& op, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Q = op.A_tilde * X;
  return op.A_tilde * Q;
}

/// W* = (M^T D M + xi I)^-1 M^T D Y with M the training rows of A_tilde^2 X.
inline LgcnFit rwls_fit(const PropagationOperator& op, const Eigen::MatrixXd& X, const LabeledNodes& train, double omega,
                        double xi) {
  lgcn_detail::check_fit_inputs(X, train, omega, xi, op.size());
  return rwls_fit_propagated(propagate_twice(op, X), train, omega, xi);
}

/// Unweighted ridge baseline (D = I).
inline LgcnFit ridge_fit(const PropagationOperator& op, const Eigen::MatrixXd& X, const LabeledNodes& train, double xi) {
  return rwls_fit(op, X, train, 1.0, xi);
}

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// Scores sigmoid(A_tilde^2 X W*) for every node.
inline Eigen::VectorXd predict(const LgcnFit& fit, const PropagationOperator& op, const Eigen::MatrixXd& X) {
  Eigen::VectorXd u = propagate_twice(op, X) * fit.W;
  return u.unaryExpr([](double t) { return sigmoid(t); });
}

inline std::vector<int> hard_labels(const Eigen::VectorXd& z, std::span<const int> nodes) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (int v : nodes) out.push_back(z(v) >= 0.5 ? 1 : 0);
  return out;
}

constexpr double kScoreClamp = 1e-12;

/// Reweighted binary cross-entropy, summed: -sum(omega y ln z + (1-y) ln(1-z)).
inline double rbce_loss(std::span<const double> z, std::span<const int> y, double omega) {
  if (z.size() != y.size()) throw DataError("rbce_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double zc = std::clamp(z[k], kScoreClamp, 1.0 - kScoreClamp);
    loss -= y[k] == 1 ? omega * std::log(zc) : std::log(1.0 - zc);
  }
  return loss;
}

struct SplitLoss {
  double h = 0.5;
  double train_term = 0.0;
  double test_term = 0.0;

  double total() const { return h * train_term + (1.0 - h) * test_term; }
};

/// Inputs of the attack loss: attributes, true training labels, pseudo labels
/// for test nodes from a clean pre-trained fit, and the loss weights.
struct LgcnProblem {
  Eigen::MatrixXd X;
  LabeledNodes train;
  LabeledNodes test_pseudo;
  double omega = 1.0;
  double xi = 0.1;
  double h = 0.5;
};

/// Everything the loss and its adjoint need, for one propagation operator.
struct LgcnForward {
  Eigen::MatrixXd Q;  // A_tilde X
  Eigen::MatrixXd P;  // A_tilde^2 X
  LgcnFit fit;
  Eigen::LLT<Eigen::MatrixXd> factor;
  Eigen::VectorXd z;  // scores for all nodes
  SplitLoss loss;
};

inline LgcnForward lgcn_forward(const SparseMatrix& A_tilde, const LgcnProblem& prob) {
  lgcn_detail::check_fit_inputs(prob.X, prob.train, prob.omega, prob.xi, A_tilde.rows());
  LgcnForward f;
  f.Q = A_tilde * prob.X;
  f.P = A_tilde * f.Q;
  f.fit = rwls_fit_propagated(f.P, prob.train, prob.omega, prob.xi, &f.factor);
  const Eigen::VectorXd u = f.P * f.fit.W;
  f.z = u.unaryExpr([](double t) { return sigmoid(t); });
  auto subset_loss = [&](const LabeledNodes& part) {
    std::vector<double> zs;
    zs.reserve(part.size());
    for (int v : part.nodes) zs.push_back(f.z(v));
    return rbce_loss(zs, part.y, prob.omega);
  };
  f.loss.h = prob.h;
  f.loss.train_term = subset_loss(prob.train);
  f.loss.test_term = prob.test_pseudo.size() ? subset_loss(prob.test_pseudo) : 0.0;
  return f;
}

/// Split R-BCE after refitting W* on `g`. The attacker maximises this value.
inline SplitLoss attack_loss(const Graph& g, const LgcnProblem& prob) {
  if (!(prob.h >= 0.0 && prob.h <= 1.0)) throw UsageError("mixing weight h must lie in [0, 1]");
  return lgcn_forward(normalized_adjacency(g).A_tilde, prob).loss;
}

/// i.i.d. N(0,1) attributes; every column of an anomalous row is shifted by `boost`.
inline Eigen::MatrixXd boosted_attributes(const std::vector<int>& y, int p, double boost, std::uint64_t seed) {
  if (p < 1) throw UsageError("attribute dimension must be >= 1");
  Rng rng = make_rng(seed, 77);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(y.size()), p);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = z(rng) + (y[static_cast<std::size_t>(i)] ? boost : 0.0);
  return X;
}

/// Pre-trains on the clean graph and labels the test nodes with its hard predictions.
inline LgcnProblem make_lgcn_problem(const AttributedDataset& data, const Split& split, double xi, double h,
                                     OmegaConvention conv = OmegaConvention::NegativeOverPositive) {
  data.validate();
  LgcnProblem prob;
  prob.X = data.X;
  prob.train = label_nodes(split.train, data.y);
  prob.omega = class_weight(prob.train.y, conv);
  prob.xi = xi;
  prob.h = h;
  const auto op = normalized_adjacency(data.graph);
  const auto fit = rwls_fit(op, data.X, prob.train, prob.omega, xi);
  const auto z = predict(fit, op, data.X);
  prob.test_pseudo.nodes = split.test;
  prob.test_pseudo.y = hard_labels(z, split.test);
  return prob;
}

}  // namespace gadlab
