#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gadlab/attack.hpp"
#include "gadlab/graph_ops.hpp"
#include "gadlab/objectives.hpp"

using namespace gadlab;

namespace {

// Differences of the relaxed objective, moving both symmetric entries. Central
// except next to a node of degree 1, where the degree clamp makes the function
// kink and a second-order forward difference is used.
std::vector<double> finite_difference(const AttackObjective& obj, Eigen::MatrixXd A, const std::vector<NodePair>& pairs,
                                      double h = 1e-5) {
  const Eigen::VectorXd deg = A.rowwise().sum();
  std::vector<double> out;
  for (auto p : pairs) {
    const double a = A(p.i, p.j);
    auto at = [&](double v) {
      A(p.i, p.j) = A(p.j, p.i) = v;
      return obj.relaxed_value(A);
    };
    const bool kink = std::min(deg(p.i), deg(p.j)) < 1.0 + h;
    out.push_back(kink ? (-3 * at(a) + 4 * at(a + h) - at(a + 2 * h)) / (2 * h) : (at(a + h) - at(a - h)) / (2 * h));
    A(p.i, p.j) = A(p.j, p.i) = a;
  }
  return out;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
  double scale = 0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  double worst = 0;
  for (std::size_t k = 0; k < fd.size(); ++k)
    worst = std::max(worst, std::abs(analytic[k] - fd[k]) / std::max(std::abs(fd[k]), 1e-3 * scale));
  return worst;
}

Eigen::MatrixXd interior_point(const Graph& g, std::uint64_t seed) {
  Eigen::MatrixXd A = dense_adjacency(g);
  Rng rng = make_rng(seed, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j = i + 1; j < g.num_nodes(); ++j) {
      const double v = A(i, j) > 0 ? 0.6 + 0.35 * u(rng) : 0.3 * u(rng);
      A(i, j) = A(j, i) = v;
    }
  return A;
}

LgcnProblem small_problem(const Graph& g, std::uint64_t seed) {
  auto inj = inject_cliques(g, 1, 4, seed);
  AttributedDataset ds;
  ds.graph = inj.graph;
  ds.y = inj.labels;
  Rng rng = make_rng(seed, 6);
  std::normal_distribution<double> z;
  ds.X.resize(g.num_nodes(), 5);
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j = 0; j < 5; ++j) ds.X(i, j) = z(rng) + 0.3 * ds.y[static_cast<std::size_t>(i)];
  return make_lgcn_problem(ds, stratified_split(ds.y, 0.3, seed), 0.1, 0.5);
}

}  // namespace

TEST(OddballObjective, ValueMatchesSurrogate) {
  auto g = generate_ba(60, 3, 1);
  TargetSet t{{2, 9, 30}, {}};
  OddballSurrogateObjective obj(t);
  EXPECT_NEAR(obj.value(g), surrogate_objective(g, t), 1e-9 * surrogate_objective(g, t));
  EXPECT_DOUBLE_EQ(obj.relaxed_value(dense_adjacency(g)), obj.value(g));
}

TEST(OddballObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto g = generate_ba(30, 2 + static_cast<int>(s % 2), s);
    TargetSet t = pick_targets(oddball(g), 10, 3, s);
    OddballSurrogateObjective obj(t);
    auto cand = build_candidates(g, CandidateMode::Full);
    for (const auto& A : {dense_adjacency(g), interior_point(g, s)}) {
      std::vector<double> grad(cand.size());
      obj.relaxed_value_and_gradient(A, cand.pairs, grad);
      EXPECT_LE(max_relative_error(grad, finite_difference(obj, A, cand.pairs)), 1e-4) << "seed " << s;
    }
  }
}

TEST(Objectives, GradientNextToDegreeOneNodes) {
  // BA(30, 2) with this seed has a degree-1 seed node
  const Graph base = generate_ba(30, 2, 305);
  int leaf = -1;
  for (int i = 0; i < base.num_nodes(); ++i)
    if (base.degree(i) == 1) leaf = i;
  ASSERT_GE(leaf, 0);
  OddballSurrogateObjective odd(pick_targets(oddball(base), 10, 3, 5));
  auto cand = build_candidates(base, CandidateMode::Direct, std::vector<int>{leaf});
  std::vector<double> grad(cand.size());
  odd.value_and_gradient(base, cand.pairs, grad);
  EXPECT_LE(max_relative_error(grad, finite_difference(odd, dense_adjacency(base), cand.pairs)), 1e-4);

  auto prob = small_problem(base, 5);
  auto g = inject_cliques(base, 1, 4, 5).graph;
  LgcnAttackObjective lg(prob);
  for (int i = 0; i < g.num_nodes(); ++i)
    if (g.degree(i) == 1) leaf = i;
  ASSERT_EQ(g.degree(leaf), 1);
  cand = build_candidates(g, CandidateMode::Direct, std::vector<int>{leaf});
  grad.assign(cand.size(), 0.0);
  lg.value_and_gradient(g, cand.pairs, grad);
  EXPECT_LE(max_relative_error(grad, finite_difference(lg, dense_adjacency(g), cand.pairs)), 1e-4);
}

TEST(OddballObjective, SparseAndDenseGradientsAgree) {
  auto g = generate_ba(80, 3, 7);
  TargetSet t{{0, 11, 42}, {1.0, 0.5, 2.0}};
  OddballSurrogateObjective obj(t);
  auto cand = build_candidates(g, CandidateMode::Full);
  std::vector<double> gs(cand.size()), gd(cand.size());
  const double vs = obj.value_and_gradient(g, cand.pairs, gs);
  const double vd = obj.relaxed_value_and_gradient(dense_adjacency(g), cand.pairs, gd);
  EXPECT_NEAR(vs, vd, 1e-9 * vs);
  for (std::size_t k = 0; k < gs.size(); ++k) EXPECT_NEAR(gs[k], gd[k], 1e-8 * (1.0 + std::abs(gd[k])));
}

TEST(OddballObjective, UnsortedPairsGiveSameGradient) {
  auto g = generate_ba(40, 3, 2);
  OddballSurrogateObjective obj(TargetSet{{3, 4}, {}});
  auto cand = build_candidates(g, CandidateMode::Full);
  std::vector<NodePair> shuffled = cand.pairs;
  Rng rng = make_rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<double> a(cand.size()), b(cand.size());
  obj.value_and_gradient(g, cand.pairs, a);
  obj.value_and_gradient(g, shuffled, b);
  for (std::size_t k = 0; k < shuffled.size(); ++k) {
    const auto pos = std::lower_bound(cand.pairs.begin(), cand.pairs.end(), shuffled[k]) - cand.pairs.begin();
    EXPECT_EQ(b[k], a[static_cast<std::size_t>(pos)]);
  }
}

TEST(OddballObjective, PermutationEquivariance) {
  auto g = generate_ba(40, 3, 3);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<NodePair> e;
  for (auto p : g.edges()) e.emplace_back(perm[static_cast<std::size_t>(p.i)], perm[static_cast<std::size_t>(p.j)]);
  auto h = Graph::from_edges(40, e);
  TargetSet t{{1, 7}, {}};
  TargetSet tp{{perm[1], perm[7]}, {}};
  auto cand = build_candidates(g, CandidateMode::Full);
  std::vector<NodePair> mapped;
  for (auto p : cand.pairs) mapped.emplace_back(perm[static_cast<std::size_t>(p.i)], perm[static_cast<std::size_t>(p.j)]);
  std::vector<double> a(cand.size()), b(cand.size());
  OddballSurrogateObjective(t).value_and_gradient(g, cand.pairs, a);
  OddballSurrogateObjective(tp).value_and_gradient(h, mapped, b);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9 * (1.0 + std::abs(a[k])));
}

TEST(OddballObjective, SingularFitPropagates) {
  // cycle: every node has N = 2
  std::vector<NodePair> e;
  for (int i = 0; i < 6; ++i) e.emplace_back(i, (i + 1) % 6);
  auto g = Graph::from_edges(6, e);
  OddballSurrogateObjective obj(TargetSet{{0}, {}});
  std::vector<NodePair> pairs{{0, 3}};
  std::vector<double> grad(1);
  EXPECT_THROW(obj.value_and_gradient(g, pairs, grad), SingularDesignError);
}

TEST(LgcnObjective, ValueIsNegatedAttackLoss) {
  auto g = generate_ba(40, 3, 4);
  auto prob = small_problem(g, 4);
  LgcnAttackObjective obj(prob);
  auto dg = inject_cliques(g, 1, 4, 4).graph;
  EXPECT_NEAR(obj.value(dg), -attack_loss(dg, prob).total(), 1e-10);
}

TEST(LgcnObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto base = generate_ba(30, 2 + static_cast<int>(s % 2), s);
    auto prob = small_problem(base, s);
    auto g = inject_cliques(base, 1, 4, s).graph;
    LgcnAttackObjective obj(prob);
    auto cand = build_candidates(g, CandidateMode::Full);
    for (const auto& A : {dense_adjacency(g), interior_point(g, s)}) {
      std::vector<double> grad(cand.size());
      obj.relaxed_value_and_gradient(A, cand.pairs, grad);
      EXPECT_LE(max_relative_error(grad, finite_difference(obj, A, cand.pairs)), 1e-4) << "seed " << s;
    }
  }
}

TEST(LgcnObjective, BinaryAndRelaxedPathsAgree) {
  auto base = generate_ba(50, 3, 9);
  auto prob = small_problem(base, 9);
  auto g = inject_cliques(base, 1, 4, 9).graph;
  LgcnAttackObjective obj(prob);
  auto cand = build_candidates(g, CandidateMode::Direct, std::vector<int>{0, 5});
  std::vector<double> a(cand.size()), b(cand.size());
  const double va = obj.value_and_gradient(g, cand.pairs, a);
  const double vb = obj.relaxed_value_and_gradient(dense_adjacency(g), cand.pairs, b);
  EXPECT_NEAR(va, vb, 1e-12 * std::abs(va));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-10 * (1.0 + std::abs(a[k])));
}
