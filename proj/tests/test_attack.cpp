#include <gtest/gtest.h>

#include <cstdlib>

#include "gadlab/attack.hpp"
#include "gadlab/graph_ops.hpp"
#include "test_util.hpp"

using namespace gadlab;
using testing_util::make_graph;

namespace {

void expect_replays(const Graph& g, const PerturbationPlan& plan, std::size_t b) {
  EXPECT_LE(plan.size(), b);
  Graph h = g;
  EXPECT_NO_THROW(h = apply_perturbation(g, plan));
  EXPECT_EQ(edge_distance(g, h), plan.size());
  EXPECT_FALSE(h.has_isolated_node());
}

struct Setup {
  Graph g;
  TargetSet targets;
};

Setup oddball_setup(int n, int m, std::uint64_t seed, int count) {
  Setup s{generate_ba(n, m, seed), {}};
  s.targets = pick_targets(oddball(s.g), std::min(n, 50), count, seed);
  return s;
}

class ScopedThreads {
 public:
  explicit ScopedThreads(const char* v) {
    if (const char* old = std::getenv("GADLAB_THREADS")) old_ = old;
    setenv("GADLAB_THREADS", v, 1);
  }
  ~ScopedThreads() {
    if (old_.empty()) unsetenv("GADLAB_THREADS");
    else setenv("GADLAB_THREADS", old_.c_str(), 1);
  }

 private:
  std::string old_;
};

}  // namespace

TEST(Candidates, FullAndDirect) {
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  auto full = build_candidates(g, CandidateMode::Full);
  EXPECT_EQ(full.size(), 6u);
  std::vector<int> t{0};
  auto direct = build_candidates(g, CandidateMode::Direct, t);
  EXPECT_EQ(direct.pairs, (std::vector<NodePair>{{0, 1}, {0, 2}, {0, 3}}));
  EXPECT_THROW(build_candidates(g, CandidateMode::Direct), UsageError);
  auto big = generate_ba(60, 2, 1);
  std::vector<int> t2{5, 17, 40};
  auto d2 = build_candidates(big, CandidateMode::Direct, t2);
  EXPECT_LE(d2.size(), build_candidates(big, CandidateMode::Full).size());
  EXPECT_TRUE(std::is_sorted(d2.pairs.begin(), d2.pairs.end()));
  for (auto p : d2.pairs) EXPECT_TRUE(p.i == 5 || p.i == 17 || p.i == 40 || p.j == 5 || p.j == 17 || p.j == 40);
}

TEST(FlipMap, Examples) {
  auto g = make_graph(3, {{0, 1}, {1, 2}});
  CandidateSet c{{{0, 1}, {0, 2}}, CandidateMode::Full};
  EXPECT_EQ(dummy_from_soft(0.7), -1);
  EXPECT_EQ(dummy_from_soft(0.2), 1);
  EXPECT_EQ(dummy_from_soft(0.5), -1);
  std::vector<int> z{dummy_from_soft(0.7), dummy_from_soft(0.2)};
  auto h = flip_map(g, c, z);
  EXPECT_FALSE(h.has_edge(0, 1));
  EXPECT_FALSE(h.has_edge(0, 2));
  std::vector<int> ones{1, 1};
  EXPECT_EQ(flip_map(g, c, ones), g);
  std::vector<int> bad{0, 1};
  EXPECT_THROW(flip_map(g, c, bad), DataError);
}

TEST(FlipMap, StraightThroughConsistency) {
  auto g = generate_ba(30, 2, 4);
  auto cand = build_candidates(g, CandidateMode::Full);
  Rng rng = make_rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> z(cand.size());
    std::vector<double> zr(cand.size());
    for (std::size_t k = 0; k < z.size(); ++k) zr[k] = z[k] = dummy_from_soft(u(rng) * 0.6);
    Eigen::MatrixXd A = flip_map_relaxed(g, cand, zr);
    EXPECT_EQ(A, A.transpose());
    EXPECT_EQ(A.diagonal().cwiseAbs().sum(), 0.0);
    EXPECT_TRUE(((A.array() == 0.0) || (A.array() == 1.0)).all());
    EXPECT_EQ(A, dense_adjacency(flip_map(g, cand, z)));
    std::size_t flips = 0;
    for (int v : z) flips += v == -1;
    EXPECT_EQ(edge_distance(g, flip_map(g, cand, z)), flips);
  }
}

TEST(GradMax, ZeroBudget) {
  auto s = oddball_setup(40, 3, 1, 3);
  OddballSurrogateObjective obj(s.targets);
  auto res = gradmax_search(obj, s.g, build_candidates(s.g, CandidateMode::Full), AttackConfig{});
  EXPECT_TRUE(res.plan.empty());
  EXPECT_EQ(res.objective_final, res.objective_clean);
}

TEST(GradMax, FirstPickMatchesFiniteDifferenceOracle) {
  auto s = oddball_setup(20, 2, 3, 3);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 1;
  auto res = gradmax_search(obj, s.g, cand, cfg);
  ASSERT_EQ(res.plan.size(), 1u);

  Eigen::MatrixXd A = dense_adjacency(s.g);
  const double h = 1e-6;
  NodePair best;
  double best_abs = 0;
  for (auto p : cand.pairs) {
    const double a = A(p.i, p.j);
    A(p.i, p.j) = A(p.j, p.i) = a + h;
    const double fp = obj.relaxed_value(A);
    A(p.i, p.j) = A(p.j, p.i) = a - h;
    const double fm = obj.relaxed_value(A);
    A(p.i, p.j) = A(p.j, p.i) = a;
    const double d = (fp - fm) / (2 * h);
    const bool present = a == 1.0;
    if (present ? d <= 0 : d >= 0) continue;
    if (present && (s.g.degree(p.i) == 1 || s.g.degree(p.j) == 1)) continue;
    if (std::abs(d) > best_abs) {
      best_abs = std::abs(d);
      best = p;
    }
  }
  EXPECT_EQ(res.plan.ops[0].pair(), best);
}

TEST(GradMax, SignValidNoRevisitAndReplays) {
  auto s = oddball_setup(80, 3, 5, 4);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 15;
  auto res = gradmax_search(obj, s.g, cand, cfg);
  ASSERT_EQ(res.log.size(), res.plan.size());
  std::set<NodePair> seen;
  Graph g = s.g;
  for (std::size_t k = 0; k < res.plan.size(); ++k) {
    const auto& op = res.plan.ops[k];
    EXPECT_TRUE(seen.insert(op.pair()).second);
    EXPECT_EQ(op.kind == EdgeOpKind::Delete, g.has_edge(op.i, op.j));
    EXPECT_TRUE(op.kind == EdgeOpKind::Add ? res.log[k].gradient < 0 : res.log[k].gradient > 0);
    EXPECT_NEAR(res.log[k].objective_before, obj.value(g), 1e-9 * (1 + obj.value(g)));
    g = apply_perturbation(g, PerturbationPlan{{op}, 1});
  }
  for (std::size_t b = 0; b <= res.plan.size(); ++b) expect_replays(s.g, res.plan.prefix(b), b);
  EXPECT_LT(res.objective_final, res.objective_clean);
}

TEST(GradMax, TruncatesWhenNoValidMove) {
  // zero gradient everywhere: no sign-valid pair exists
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  OddballSurrogateObjective obj(TargetSet{{0, 1}, {}});
  AttackConfig cfg;
  cfg.budget = 3;
  auto res = gradmax_search(obj, g, build_candidates(g, CandidateMode::Full), cfg);
  EXPECT_TRUE(res.truncated);
  EXPECT_TRUE(res.plan.empty());
}

TEST(Continuous, OptimalGraphGivesNoFlips) {
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  OddballSurrogateObjective obj(TargetSet{{0, 1}, {}});
  AttackConfig cfg;
  cfg.budget = 2;
  auto res = continuous_attack(obj, g, build_candidates(g, CandidateMode::Full), cfg);
  EXPECT_TRUE(res.ranked.empty());
  EXPECT_TRUE(res.plan_for(g, 2).empty());
  EXPECT_EQ(res.iterations_run, 1);
}

TEST(Continuous, FullBudgetValidPlan) {
  auto s = oddball_setup(200, 3, 1, 5);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 12;
  cfg.iterations = 50;
  auto res = continuous_attack(obj, s.g, cand, cfg);
  auto plan = res.plan_for(s.g, 12);
  EXPECT_EQ(plan.size(), 12u);
  expect_replays(s.g, plan, 12);
  for (std::size_t k = 1; k < res.delta.size(); ++k) EXPECT_GE(res.delta[k - 1], res.delta[k]);
  for (std::size_t b = 0; b <= 12; ++b) expect_replays(s.g, res.plan_for(s.g, b), b);
  bool adds_done = false;
  for (const auto& op : plan.ops) {
    if (op.kind == EdgeOpKind::Delete) adds_done = true;
    else EXPECT_FALSE(adds_done);
  }
}

TEST(Binarized, SelectionRule) {
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  CandidateSet cand{{{0, 1}, {0, 2}, {1, 3}}, CandidateMode::Full};
  BinarizedResult r;
  HistoryEntry a;
  a.flip_count = 1;
  a.objective = 5.0;
  a.flipped = {1};
  a.soft = {0.6};
  HistoryEntry b;
  b.flip_count = 2;
  b.objective = 3.0;
  b.flipped = {1, 2};
  b.soft = {0.7, 0.9};
  HistoryEntry tie = b;
  tie.flipped = {0, 2};
  r.history = {a, b, tie};
  auto sel = r.select(g, cand, 2);
  EXPECT_EQ(sel.objective, 3.0);
  EXPECT_EQ(sel.plan.ops, (std::vector<EdgeOp>{{0, 2, EdgeOpKind::Add}, {1, 3, EdgeOpKind::Add}}));
  EXPECT_EQ(r.select(g, cand, 1).objective, 5.0);
  EXPECT_FALSE(sel.fallback);
}

TEST(Binarized, FallbackTruncatesByDescendingSoftValue) {
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  CandidateSet cand{{{0, 1}, {0, 2}, {1, 3}}, CandidateMode::Full};
  BinarizedResult r;
  r.best_overall.flip_count = 3;
  r.best_overall.flipped = {0, 1, 2};
  r.best_overall.soft = {0.6, 0.9, 0.8};
  auto sel = r.select(g, cand, 2);
  EXPECT_TRUE(sel.fallback);
  EXPECT_EQ(sel.plan.ops, (std::vector<EdgeOp>{{0, 2, EdgeOpKind::Add}, {1, 3, EdgeOpKind::Add}}));
}

TEST(Binarized, ZeroBudgetIsClean) {
  auto s = oddball_setup(50, 3, 2, 3);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.iterations = 20;
  auto res = binarized_attack(obj, s.g, cand, cfg);
  auto sel = res.select(s.g, cand, 0);
  EXPECT_TRUE(sel.plan.empty());
  EXPECT_EQ(sel.objective, res.objective_clean);
  EXPECT_EQ(res.objective_clean, obj.value(s.g));
}

TEST(Binarized, ReducesObjectiveWithValidPlans) {
  auto s = oddball_setup(100, 5, 42, 5);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 10;
  cfg.seed = 42;
  auto res = binarized_attack(obj, s.g, cand, cfg);
  for (std::size_t b = 0; b <= cfg.budget; ++b) {
    auto sel = res.select(s.g, cand, b);
    expect_replays(s.g, sel.plan, b);
    const double from_scratch = surrogate_objective(apply_perturbation(s.g, sel.plan), s.targets);
    EXPECT_NEAR(sel.objective, from_scratch, 1e-9 * from_scratch);
    EXPECT_LE(sel.objective, res.objective_clean);
  }
  EXPECT_LT(res.select(s.g, cand, 10).objective, res.objective_clean);
  for (const auto& e : res.history) {
    EXPECT_LE(e.flip_count, cfg.budget);
    EXPECT_EQ(e.flipped.size(), e.flip_count);
    for (double z : e.soft) EXPECT_GE(z, 0.5);
  }
}

TEST(Binarized, DirectModeOnlyTouchesTargets) {
  auto s = oddball_setup(100, 4, 3, 4);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Direct, s.targets.nodes);
  AttackConfig cfg;
  cfg.budget = 8;
  cfg.iterations = 60;
  auto plan = binarized_attack(obj, s.g, cand, cfg).select(s.g, cand, 8).plan;
  for (const auto& op : plan.ops) {
    const bool touches = std::binary_search(s.targets.nodes.begin(), s.targets.nodes.end(), op.i) ||
                         std::binary_search(s.targets.nodes.begin(), s.targets.nodes.end(), op.j);
    EXPECT_TRUE(touches);
  }
}

TEST(Attacks, DeterministicAcrossRunsAndThreadCounts) {
  auto s = oddball_setup(80, 3, 9, 4);
  OddballSurrogateObjective obj(s.targets);
  auto cand = build_candidates(s.g, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 6;
  cfg.iterations = 40;
  std::vector<PerturbationPlan> plans;
  for (const char* threads : {"1", "4", "1"}) {
    ScopedThreads env(threads);
    plans.push_back(binarized_attack(obj, s.g, cand, cfg).select(s.g, cand, 6).plan);
    plans.push_back(gradmax_search(obj, s.g, cand, cfg).plan);
    plans.push_back(continuous_attack(obj, s.g, cand, cfg).plan_for(s.g, 6));
  }
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(plans[k], plans[k + 3]);
    EXPECT_EQ(plans[k], plans[k + 6]);
  }
}

TEST(Attacks, LgcnObjectiveRaisesLoss) {
  auto base = generate_ba(60, 3, 2);
  auto inj = inject_cliques(base, 2, 5, 2);
  AttributedDataset ds;
  ds.graph = inj.graph;
  ds.y = inj.labels;
  Rng rng = make_rng(2, 1);
  std::normal_distribution<double> z;
  ds.X.resize(60, 4);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 4; ++j) ds.X(i, j) = z(rng) + 0.5 * ds.y[static_cast<std::size_t>(i)];
  auto prob = make_lgcn_problem(ds, stratified_split(ds.y, 0.2, 1), 0.1, 0.5);
  LgcnAttackObjective obj(prob);
  auto cand = build_candidates(ds.graph, CandidateMode::Full);
  AttackConfig cfg;
  cfg.budget = 10;
  cfg.iterations = 40;
  auto sel = binarized_attack(obj, ds.graph, cand, cfg).select(ds.graph, cand, 10);
  expect_replays(ds.graph, sel.plan, 10);
  auto poisoned = apply_perturbation(ds.graph, sel.plan);
  EXPECT_GT(attack_loss(poisoned, prob).total(), attack_loss(ds.graph, prob).total());
  auto gm = gradmax_search(obj, ds.graph, cand, cfg);
  expect_replays(ds.graph, gm.plan, 10);
  EXPECT_LT(gm.objective_final, gm.objective_clean);
}

TEST(AttackConfig, Validation) {
  AttackConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = AttackConfig{};
  cfg.lambda_grid.clear();
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = AttackConfig{};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
}
