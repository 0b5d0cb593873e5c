#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "csma/error.hpp"
#include "csma/metrics.hpp"
#include "csma/rng.hpp"

using namespace csma;

namespace {

// P-value from exact integer binomial coefficients (n <= 60).
double exact_binomial_p(unsigned b, unsigned c) {
  const unsigned n = b + c, k = std::min(b, c);
  if (n == 0) return 1.0;
  unsigned long long coeff = 1, tail = 0;
  for (unsigned i = 0; i <= k; ++i) {
    tail += coeff;
    coeff = coeff * (n - i) / (i + 1);
  }
  return std::min(1.0, 2.0 * static_cast<double>(tail) / std::ldexp(1.0, static_cast<int>(n)));
}

// AUC as the probability a random adult outscores a random minor (ties 1/2).
double pairwise_auc(const std::vector<double>& s, const std::vector<Label>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == kAdult && y[j] == kMinor) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

}  // namespace

TEST(Metrics, MeanAccuracyOfPublishedPair) {
  const double mean = mean_class_accuracy(93.52, 90.65);
  EXPECT_NEAR(mean, 92.085, 1e-12);
  EXPECT_EQ(format_percent(mean), "92.09");
}

TEST(Metrics, FormatPercentRoundsHalfUp) {
  EXPECT_EQ(format_percent(92.085), "92.09");
  EXPECT_EQ(format_percent(0.005), "0.01");
  EXPECT_EQ(format_percent(0.0049), "0.00");
  EXPECT_EQ(format_percent(100.0), "100.00");
  EXPECT_EQ(format_percent(73.125), "73.13");
  EXPECT_EQ(format_percent(99.995), "100.00");
  EXPECT_EQ(format_percent(50.0), "50.00");
}

TEST(Metrics, EvaluateConfusionAndAccuracies) {
  const std::vector<Label> y{0, 0, 0, 0, 1, 1};
  const std::vector<Label> p{0, 0, 0, 1, 1, 0};
  const std::vector<double> s{0.1, 0.2, 0.3, 0.6, 0.9, 0.4};
  const EvalReport r = evaluate(p, s, y);
  EXPECT_EQ(r.confusion[0][0], 3u);
  EXPECT_EQ(r.confusion[0][1], 1u);
  EXPECT_EQ(r.confusion[1][0], 1u);
  EXPECT_EQ(r.confusion[1][1], 1u);
  EXPECT_EQ(r.total(), 6u);
  EXPECT_DOUBLE_EQ(r.acc_minor, 75.0);
  EXPECT_DOUBLE_EQ(r.acc_adult, 50.0);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 62.5);
  EXPECT_DOUBLE_EQ(r.minor_misclassification_rate, 25.0);
  EXPECT_DOUBLE_EQ(r.auc, pairwise_auc(s, y));
}

TEST(Metrics, EvaluateErrors) {
  const std::vector<Label> y{0, 1};
  const std::vector<Label> p{0};
  const std::vector<double> s{0.1, 0.2};
  try {
    evaluate(p, s, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::consistency);
  }
  const std::vector<Label> same{1, 1};
  try {
    evaluate(same, s, same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient);
  }
}

TEST(Metrics, RocEndpointsMonotoneAndAucMatchesPairs) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<double> s(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 3 == 0 ? kAdult : kMinor;
      // Coarse scores so ties occur.
      s[i] = std::round(rng.uniform() * 8.0) / 8.0;
    }
    const auto roc = roc_curve(s, y);
    ASSERT_GE(roc.size(), 2u);
    EXPECT_EQ(roc.front().fpr, 0.0);
    EXPECT_EQ(roc.front().tpr, 0.0);
    EXPECT_EQ(roc.back().fpr, 1.0);
    EXPECT_EQ(roc.back().tpr, 1.0);
    for (std::size_t i = 1; i < roc.size(); ++i) {
      EXPECT_LE(roc[i - 1].fpr, roc[i].fpr);
      EXPECT_LE(roc[i - 1].tpr, roc[i].tpr);
      EXPECT_GT(roc[i - 1].threshold, roc[i].threshold);
    }
    EXPECT_NEAR(roc_auc(roc), pairwise_auc(s, y), 1e-12);
  }
}

TEST(Metrics, PerfectAndInvertedScores) {
  const std::vector<Label> y{0, 0, 1, 1};
  EXPECT_EQ(roc_auc(roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y)), 1.0);
  EXPECT_EQ(roc_auc(roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y)), 0.0);
  EXPECT_EQ(roc_auc(roc_curve(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y)), 0.5);
}

TEST(McNemar, ClosedForms) {
  EXPECT_NEAR(mcnemar_exact_p(10, 0), 0.001953125, 1e-9);
  EXPECT_NEAR(mcnemar_exact_p(3, 7), 0.34375, 1e-9);
  EXPECT_EQ(mcnemar_exact_p(5, 5), 1.0);
  EXPECT_EQ(mcnemar_exact_p(0, 0), 1.0);
  EXPECT_EQ(mcnemar_exact_p(0, 1), 1.0);
}

TEST(McNemar, MatchesIntegerBinomialSums) {
  for (unsigned b = 0; b <= 30; ++b)
    for (unsigned c = 0; c <= 30; ++c) {
      EXPECT_NEAR(mcnemar_exact_p(b, c), exact_binomial_p(b, c), 1e-12) << b << "," << c;
      EXPECT_EQ(mcnemar_exact_p(b, c), mcnemar_exact_p(c, b));
    }
}

TEST(McNemar, LargeCountsStayFinite) {
  const double p = mcnemar_exact_p(5000, 5200);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  EXPECT_GE(mcnemar_exact_p(0, 100000), 0.0);
}

TEST(McNemar, RejectionRateUnderNullIsAtMostAlpha) {
  // Under H0 each discordant pair favours A or B with probability 1/2; the
  // exact test is conservative, so at most 5% of draws may be significant.
  Rng rng(17);
  int rejections = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    std::size_t b = 0, c = 0;
    for (int i = 0; i < 40; ++i) (rng.bernoulli(0.5) ? b : c)++;
    rejections += mcnemar_exact_p(b, c) < 0.05;
  }
  EXPECT_LE(rejections, trials * 0.05 + 3 * std::sqrt(trials * 0.05));
}

TEST(McNemar, FromCorrectnessVectors) {
  std::vector<bool> a(20, true), b(20, true);
  for (int i = 0; i < 10; ++i) b[i] = false;
  const McNemarResult r = mcnemar_test(a, b);
  EXPECT_EQ(r.b, 10u);
  EXPECT_EQ(r.c, 0u);
  EXPECT_NEAR(r.p_value, 0.001953125, 1e-9);
  EXPECT_TRUE(r.significant_at_95);
  const McNemarResult swapped = mcnemar_test(b, a);
  EXPECT_EQ(swapped.b, 0u);
  EXPECT_EQ(swapped.c, 10u);
  EXPECT_EQ(swapped.p_value, r.p_value);
  const McNemarResult self = mcnemar_test(a, a);
  EXPECT_EQ(self.p_value, 1.0);
  EXPECT_FALSE(self.significant_at_95);
  EXPECT_THROW(mcnemar_test(a, std::vector<bool>(3)), Error);
}

TEST(Metrics, ReportFormats) {
  const std::vector<Label> y{0, 1, 1};
  const std::vector<Label> p{0, 1, 0};
  const std::vector<double> s{0.2, 0.7, 0.4};
  const EvalReport r = evaluate(p, s, y);
  std::ostringstream out;
  write_report(out, r);
  EXPECT_NE(out.str().find("acc_minor=100.00\n"), std::string::npos);
  EXPECT_NE(out.str().find("acc_adult=50.00\n"), std::string::npos);
  EXPECT_NE(out.str().find("mean_accuracy=75.00\n"), std::string::npos);
  std::ostringstream roc;
  write_roc_csv(roc, r.roc);
  EXPECT_EQ(roc.str().rfind("threshold,fpr,tpr\n", 0), 0u);
  std::ostringstream mc;
  write_mcnemar(mc, McNemarResult{10, 0, 0.001953125, true});
  EXPECT_NE(mc.str().find("b=10\nc=0\n"), std::string::npos);
  EXPECT_NE(mc.str().find("significant_at_95=yes"), std::string::npos);
}
