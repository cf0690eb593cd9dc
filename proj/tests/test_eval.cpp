#include <gtest/gtest.h>

#include <cstdlib>

#include "gadlab/eval.hpp"
#include "gadlab/graph_ops.hpp"

using namespace gadlab;

namespace {

double auc_oracle(const std::vector<double>& s, const std::vector<int>& l) {
  double num = 0, den = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (l[a] != 1 || l[b] != 0) continue;
      den += 1;
      num += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
    }
  return num / den;
}

std::vector<double> normals(std::size_t n, double mean, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(TauAs, Examples) {
  EXPECT_DOUBLE_EQ(tau_as(10.0, 4.0), 0.6);
  EXPECT_EQ(tau_as(10.0, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(tau_as(10.0, 12.0), -0.2);
  EXPECT_EQ(tau_as(3.0, 0.0), 1.0);
  EXPECT_THROW(tau_as(0.0, 1.0), DataError);
  for (double c : {0.01, 3.0, 1e6}) EXPECT_NEAR(tau_as(c * 7.0, c * 2.5), tau_as(7.0, 2.5), 1e-14);
}

TEST(Auc, Examples) {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  EXPECT_DOUBLE_EQ(auc_score(s, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_EQ(auc_score(s, std::vector<int>{0, 1, 0, 1}), 1.0);
  EXPECT_EQ(auc_score(s, std::vector<int>{1, 0, 1, 0}), 0.0);
  std::vector<double> flat(6, 2.0);
  EXPECT_EQ(auc_score(flat, std::vector<int>{1, 0, 1, 0, 0, 1}), 0.5);
}

TEST(Auc, MatchesPairwiseOracleWithTies) {
  Rng rng = make_rng(5);
  std::uniform_int_distribution<int> score(0, 6), coin(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(40);
    std::vector<int> l(40);
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k] = score(rng);
      l[k] = coin(rng);
    }
    l[0] = 0;
    l[1] = 1;
    EXPECT_NEAR(auc_score(s, l), auc_oracle(s, l), 1e-12);
    std::vector<double> neg(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) neg[k] = -s[k];
    EXPECT_NEAR(auc_score(neg, l), 1.0 - auc_score(s, l), 1e-12);
  }
}

TEST(Auc, Errors) {
  std::vector<double> s{0.1, 0.2};
  EXPECT_THROW(auc_score(s, std::vector<int>{1, 1}), DataError);
  EXPECT_THROW(auc_score(s, std::vector<int>{0, 2}), DataError);
  EXPECT_THROW(auc_score(s, std::vector<int>{0}), DataError);
  std::vector<double> nan{0.1, std::nan("")};
  EXPECT_THROW(auc_score(nan, std::vector<int>{0, 1}), DataError);
}

TEST(Midranks, Ties) {
  std::vector<double> v{3, 1, 3, 2};
  EXPECT_EQ(midranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(PermutationTest, IdenticalInputsGivePOne) {
  auto x = normals(50, 0.0, 1);
  auto r = permutation_test(x, x, 500, 3);
  EXPECT_EQ(r.t0, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.exceed, 500u);
}

TEST(PermutationTest, DetectsShift) {
  auto x = normals(100, 0.0, 1), y = normals(100, 1.0, 2);
  auto r = permutation_test(x, y, 2000, 4);
  EXPECT_LT(r.p_value, 0.01);
  EXPECT_EQ(r.M, 2000u);
}

TEST(PermutationTest, ExactSmallCase) {
  // x = {0}, y = {1, 2}: two of the three relabellings reach t0 = 1.5
  std::vector<double> x{0.0}, y{1.0, 2.0};
  auto r = permutation_test(x, y, 30000, 9);
  EXPECT_DOUBLE_EQ(r.t0, 1.5);
  EXPECT_NEAR(r.p_value, 2.0 / 3.0, 0.02);
  auto swapped = permutation_test(y, x, 30000, 9);
  EXPECT_DOUBLE_EQ(swapped.t0, 1.5);
  EXPECT_NEAR(swapped.p_value, 2.0 / 3.0, 0.02);
}

TEST(PermutationTest, DeterministicAndThreadIndependent) {
  auto x = normals(60, 0.0, 5), y = normals(80, 0.2, 6);
  auto a = permutation_test(x, y, 5000, 17);
  auto b = permutation_test(x, y, 5000, 17);
  EXPECT_EQ(a.exceed, b.exceed);
  const char* old = std::getenv("GADLAB_THREADS");
  std::string saved = old ? old : "";
  setenv("GADLAB_THREADS", "3", 1);
  auto c = permutation_test(x, y, 5000, 17);
  if (old) setenv("GADLAB_THREADS", saved.c_str(), 1);
  else unsetenv("GADLAB_THREADS");
  EXPECT_EQ(a.exceed, c.exceed);
  EXPECT_NE(permutation_test(x, y, 5000, 18).exceed, 0u);
}

TEST(PermutationTest, NullPValuesRoughlyUniform) {
  int small = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto x = normals(20, 0.0, 1000 + t), y = normals(20, 0.0, 5000 + t);
    if (permutation_test(x, y, 2000, t).p_value < 0.05) ++small;
  }
  const double frac = small / 200.0;
  EXPECT_GE(frac, 0.01);
  EXPECT_LE(frac, 0.12);
}

TEST(PermutationTest, Errors) {
  std::vector<double> x{1.0}, none;
  EXPECT_THROW(permutation_test(x, none, 10, 1), DataError);
  EXPECT_THROW(permutation_test(x, x, 0, 1), UsageError);
}

TEST(FeatureShift, CleanVersusPoisoned) {
  auto g = generate_ba(200, 3, 2);
  auto f = egonet_features(g);
  auto same = feature_shift_report(f, f, 1000, 1);
  EXPECT_EQ(same.N.p_value, 1.0);
  EXPECT_EQ(same.E.p_value, 1.0);
  auto dense = inject_cliques(g, 5, 15, 2).graph;
  auto shift = feature_shift_report(f, egonet_features(dense), 2000, 1);
  EXPECT_LT(shift.E.p_value, 0.05);
  EXPECT_NE(shift.N.seed, shift.E.seed);
  auto other = egonet_features(generate_ba(100, 3, 2));
  EXPECT_THROW(feature_shift_report(f, other, 10, 1), DataError);
}

TEST(MetricsCsv, Format) {
  MetricRow r;
  r.method = "gradmax";
  r.budget = 5;
  r.tau_as = 0.5;
  r.p_N = 1;
  EXPECT_EQ(format_metrics_csv({r}), "method,budget,tau_as,auc,p_N,p_E\ngradmax,5,0.5,,1,\n");
}
