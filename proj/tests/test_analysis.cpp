#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "priorclean/analysis.hpp"
#include "priorclean/error.hpp"

using namespace priorclean;

TEST(Wilcoxon, PublishedSmallSampleValues) {
  // n = 10 with W = 1 and n = 9 with W = 0, two-sided exact.
  std::vector<double> x10{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> y10(10, 0.0);
  x10[0] = -1;  // one negative difference of rank 1
  const TestResult a = wilcoxon_signed_rank(x10, y10);
  EXPECT_EQ(a.statistic, 1.0);
  EXPECT_EQ(a.method, "exact");
  EXPECT_NEAR(a.p_value, 0.0039, 5e-5);
  EXPECT_NEAR(a.p_value, 4.0 / 1024.0, 1e-15);
  std::vector<double> x9{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> y9(10, 0.0);
  const TestResult b = wilcoxon_signed_rank(y9, x9);  // one zero difference dropped
  EXPECT_EQ(b.n_effective, 9u);
  EXPECT_EQ(b.statistic, 0.0);
  EXPECT_NEAR(b.p_value, 0.0039, 5e-5);
  EXPECT_NEAR(b.p_value, 2.0 / 512.0, 1e-15);
}

TEST(Wilcoxon, MatchesBruteForceUpToTwelve) {
  std::mt19937_64 rng(17);
  for (size_t n = 1; n <= 12; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        // Small integer grid forces ties and zero differences.
        x[i] = double(rng() % 7);
        y[i] = double(rng() % 7);
      }
      const oracle::Wilcoxon o = oracle::wilcoxon_brute(x, y);
      const TestResult two = wilcoxon_signed_rank(x, y, Alternative::kTwoSided);
      const TestResult gt = wilcoxon_signed_rank(x, y, Alternative::kGreater);
      const TestResult lt = wilcoxon_signed_rank(x, y, Alternative::kLess);
      EXPECT_EQ(two.n_effective, o.n);
      if (o.n == 0) {
        EXPECT_TRUE(two.degenerate);
        EXPECT_EQ(two.p_value, 1.0);
        continue;
      }
      EXPECT_NEAR(two.p_value, o.p_two_sided, 1e-12) << "n=" << n;
      EXPECT_NEAR(gt.p_value, o.p_greater, 1e-12);
      EXPECT_NEAR(lt.p_value, o.p_less, 1e-12);
      EXPECT_NEAR(gt.statistic, o.w_minus, 1e-12);
      EXPECT_NEAR(lt.statistic, o.w_plus, 1e-12);
    }
  }
}

TEST(Wilcoxon, NormalApproximationMatchesFrozenScipy) {
  // scipy.stats.wilcoxon(d, method="approx", correction=True)
  const std::vector<double> d{0.5, -1.2, 2.0, 2.0,  3.1, -0.4, 1.1, 0.9, -2.0, 4.0,
                              0.7, 1.5,  -0.6, 2.2, 0.3, 1.8,  2.5, -0.2, 0.8, 1.3,
                              0.5, 2.9,  -1.1, 0.6, 1.7, 0.4,  2.1, -0.9, 1.0, 3.3};
  const std::vector<double> zero(d.size(), 0.0);
  const TestResult two = wilcoxon_signed_rank(d, zero);
  EXPECT_EQ(two.method, "normal-approx");
  EXPECT_EQ(two.statistic, 76.0);
  EXPECT_NEAR(two.p_value, 0.001330008439101905, 1e-12);
  const TestResult gt = wilcoxon_signed_rank(d, zero, Alternative::kGreater);
  EXPECT_NEAR(gt.p_value, 0.0006650042195509525, 1e-12);
}

TEST(Wilcoxon, Errors) {
  std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(wilcoxon_signed_rank(a, b), InvalidArgument);
  EXPECT_EQ(parse_alternative("greater"), Alternative::kGreater);
  EXPECT_THROW(parse_alternative("sideways"), InvalidArgument);
}

TEST(Spearman, MatchesFrozenScipy) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, y{2, 1, 4, 3, 7, 5, 6, 9, 10, 8};
  SpearmanResult r = spearman(x, y);
  EXPECT_NEAR(r.rho, 0.9030303030303028, 1e-12);
  EXPECT_NEAR(r.p_value, 0.00034361219776328223, 1e-10);
  const std::vector<double> x2{3.1, 1.2, 5.5, 2.2, 2.2, 8.0, 4.4}, y2{1.0, 0.5, 2.5, 3.0, 1.5, 4.0, 2.0};
  r = spearman(x2, y2);
  EXPECT_NEAR(r.rho, 0.6666937223947136, 1e-12);
  EXPECT_NEAR(r.p_value, 0.10192046024618232, 1e-10);
  const std::vector<double> c{1, 1, 1};
  EXPECT_TRUE(spearman(c, std::vector<double>{1, 2, 3}).undefined);
}

TEST(Rolling, MeanAndConvergence) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(rolling_mean(v, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  std::vector<std::pair<size_t, double>> flat;
  for (size_t s = 1; s <= 2000; ++s) flat.emplace_back(s, 0.7);
  EXPECT_EQ(detect_convergence(flat), std::optional<size_t>(600));
  std::vector<std::pair<size_t, double>> ramp;
  for (size_t s = 1; s <= 2000; ++s) ramp.emplace_back(s, double(s));
  EXPECT_FALSE(detect_convergence(ramp).has_value());
  std::vector<std::pair<size_t, double>> shortlog(flat.begin(), flat.begin() + 599);
  EXPECT_FALSE(detect_convergence(shortlog).has_value());
}
