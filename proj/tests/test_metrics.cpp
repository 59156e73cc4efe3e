#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "stenograph/metrics.hpp"

using namespace stenograph;

namespace {

using Labels = std::vector<std::uint8_t>;

double brute_auc(const std::vector<double>& s, const Labels& l) {
  double pairs = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      n += 1;
      pairs += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return pairs / n;
}

std::vector<double> brute_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST(Auc, HandExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, Labels{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, Labels{0, 0, 1, 1}), 0.0);
  EXPECT_EQ(auc(std::vector<double>{0.5, 0.5}, Labels{1, 0}), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  try {
    auc(std::vector<double>{0.1, 0.2}, Labels{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined_metric);
    EXPECT_NE(std::string(e.what()).find("undefined AUC"), std::string::npos);
  }
}

TEST(Auc, MatchesPairwiseOracleAndSymmetries) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform_int(rng, 0, 198));
    std::vector<double> s(n);
    Labels l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_int(rng, 0, 20)) / 20.0;
      l[i] = uniform(rng, 0.0, 1.0) < 0.3;
    }
    l[0] = 1;
    l[1] = 0;
    const double a = auc(s, l);
    EXPECT_NEAR(a, brute_auc(s, l), 1e-12);
    std::vector<double> flipped(n), transformed(n);
    for (std::size_t i = 0; i < n; ++i) {
      flipped[i] = 1 - s[i];
      transformed[i] = std::exp(3 * s[i]) - 7;
    }
    EXPECT_NEAR(auc(flipped, l), 1 - a, 1e-12);
    EXPECT_EQ(auc(transformed, l), a);
  }
}

TEST(Roc, CurveEndsAndMonotone) {
  const std::vector<double> s = {0.9, 0.8, 0.8, 0.3, 0.1};
  const Labels l = {1, 0, 1, 0, 0};
  const auto roc = roc_curve(s, l);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  double area = 0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GE(roc[i].fpr, roc[i - 1].fpr);
    EXPECT_GE(roc[i].tpr, roc[i - 1].tpr);
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
  }
  EXPECT_NEAR(area, auc(s, l), 1e-12);
}

TEST(AucCi, MatchesReplayedBootstrap) {
  Rng data(2);
  std::vector<double> s(60);
  Labels l(60);
  for (std::size_t i = 0; i < 60; ++i) {
    l[i] = i % 3 == 0;
    s[i] = static_cast<double>(uniform_int(data, 0, 10)) + l[i] * 3.0;
  }
  const std::size_t n_boot = 200;
  const auto ci = auc_ci(s, l, n_boot, 42);
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < 60; ++i) (l[i] ? pos : neg).push_back(s[i]);
  std::vector<double> reps;
  for (std::size_t b = 0; b < n_boot; ++b) {
    Rng rng = make_rng(42, {hash_tag("auc_ci"), b});
    std::vector<double> rs;
    Labels rl;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      rs.push_back(pos[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pos.size()) - 1))]);
      rl.push_back(1);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
      rs.push_back(neg[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(neg.size()) - 1))]);
      rl.push_back(0);
    }
    reps.push_back(brute_auc(rs, rl));
  }
  std::sort(reps.begin(), reps.end());
  auto q = [&](double p) {
    const double h = p * (reps.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    return i + 1 < reps.size() ? reps[i] + (h - i) * (reps[i + 1] - reps[i]) : reps[i];
  };
  EXPECT_NEAR(ci.lo, q(0.025), 1e-12);
  EXPECT_NEAR(ci.hi, q(0.975), 1e-12);
}

TEST(AucCi, SeparableAndNoisyWidths) {
  std::vector<double> s;
  Labels l;
  for (int i = 0; i < 500; ++i) {
    s.push_back(1.0 + i * 1e-4);
    l.push_back(1);
    s.push_back(i * 1e-4);
    l.push_back(0);
  }
  const auto perfect = auc_ci(s, l, 2000, 1);
  EXPECT_GE(perfect.lo, 0.99);
  EXPECT_LE(perfect.hi, 1.0);

  Rng rng(3);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = l[i] + uniform(rng, -0.5, 0.5);
  const auto noisy = auc_ci(s, l, 2000, 1);
  EXPECT_LT(noisy.hi - noisy.lo, 0.1);
  EXPECT_LE(noisy.lo, auc(s, l));
  EXPECT_GE(noisy.hi, auc(s, l));
  const auto again = auc_ci(s, l, 2000, 1, 0.95, 3);
  EXPECT_EQ(noisy.lo, again.lo);
  EXPECT_EQ(noisy.hi, again.hi);
}

TEST(Brier, ClosedForms) {
  EXPECT_EQ(brier(std::vector<double>{0.5, 0.5, 0.5}, Labels{1, 0, 1}), 0.25);
  EXPECT_EQ(brier(std::vector<double>{1, 0}, Labels{1, 0}), 0.0);
  EXPECT_NEAR(brier(std::vector<double>{0.8, 0.4}, Labels{1, 0}), 0.10, 1e-15);
  EXPECT_THROW(brier(std::vector<double>{1.2}, Labels{1}), Error);
  const double p = 0.3;
  Labels l(100, 0);
  for (int i = 0; i < 37; ++i) l[i] = 1;
  const double q = 0.37;
  EXPECT_NEAR(brier(std::vector<double>(100, p), l), p * p - 2 * p * q + q, 1e-12);
}

TEST(Calibration, BinsAndCounts) {
  const auto one = calibration(std::vector<double>(20, 0.55), Labels(20, 1));
  std::size_t populated = 0, total = 0;
  for (const auto& b : one.bins) {
    populated += b.count > 0;
    total += b.count;
  }
  EXPECT_EQ(one.bins.size(), 10u);
  EXPECT_EQ(populated, 1u);
  EXPECT_EQ(total, 20u);
  EXPECT_EQ(calibration(std::vector<double>{1.0}, Labels{1}).bins[9].count, 1u);
}

TEST(Calibration, CalibratedPredictorWithinBinomialError) {
  Rng rng(4);
  std::vector<double> p(20000);
  Labels l(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = uniform(rng, 0.0, 1.0);
    l[i] = uniform(rng, 0.0, 1.0) < p[i];
  }
  for (const auto& b : calibration(p, l).bins) {
    if (b.count < 100) continue;
    const double se = std::sqrt(b.mean_predicted * (1 - b.mean_predicted) / static_cast<double>(b.count));
    EXPECT_LE(std::abs(b.observed - b.mean_predicted), 3 * se);
  }
}

TEST(Spearman, HandExamples) {
  EXPECT_NEAR(spearman(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0.1, 0.3, 0.2, 0.4}).rho, 0.8, 1e-15);
  EXPECT_EQ(spearman(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0.1, 0.2, 0.3, 0.4}).rho, 1.0);
  EXPECT_EQ(spearman(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0.4, 0.3, 0.2, 0.1}).rho, -1.0);
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{0.1, 0.2, 0.3}), Error);
}

TEST(Spearman, ExactPermutationPValue) {
  // n = 4, rho = 1 is reached by 1 of 24 orderings, rho = -1 by another.
  const auto r = spearman(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(r.p_method, "exact");
  EXPECT_NEAR(r.p, 2.0 / 24.0, 1e-15);
}

TEST(Spearman, MatchesRankPearsonOracleWithTies) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 12 + static_cast<std::size_t>(uniform_int(rng, 0, 100));
    std::vector<double> g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<double>(uniform_int(rng, 0, 3));
      p[i] = g[i] * 0.1 + static_cast<double>(uniform_int(rng, 0, 5)) / 10.0;
    }
    const auto r = spearman(g, p);
    EXPECT_NEAR(r.rho, brute_pearson(brute_ranks(g), brute_ranks(p)), 1e-12);
    EXPECT_TRUE(r.ties);
    EXPECT_EQ(r.p_method, "t");
  }
}

TEST(Spearman, StrongCorrelationSignificant) {
  Rng rng(6);
  std::vector<double> g(400), p(400);
  for (std::size_t i = 0; i < 400; ++i) {
    g[i] = static_cast<double>(i % 4);
    p[i] = g[i] + normal(rng);
  }
  const auto r = spearman(g, p);
  EXPECT_GT(r.rho, 0.5);
  EXPECT_LT(r.p, 1e-10);
}

TEST(BoxSummary, LinearInterpolationQuartiles) {
  const auto b = box_summary({4, 1, 3, 2});
  EXPECT_EQ(b.median, 2.5);
  EXPECT_EQ(b.q1, 1.5);
  EXPECT_EQ(b.q3, 3.5);
  const auto one = box_summary({0.3});
  EXPECT_EQ(one.q1, 0.3);
  EXPECT_EQ(one.median, 0.3);
  EXPECT_EQ(one.q3, 0.3);
  const auto out = box_summary({1, 2, 3, 4, 100});
  EXPECT_EQ(out.outliers, 1u);
  EXPECT_EQ(out.whisker_hi, 4.0);
}

TEST(BoxSummary, AbsentGradesHaveZeroCount) {
  const auto s = grade_probability_summary(std::vector<int>{0, 0, 3}, std::vector<double>{0.1, 0.2, 0.9});
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].n, 2u);
  EXPECT_EQ(s[1].n, 0u);
  EXPECT_EQ(s[2].n, 0u);
  EXPECT_EQ(s[3].median, 0.9);
  EXPECT_THROW(grade_probability_summary(std::vector<int>{4}, std::vector<double>{0.1}), Error);
}

TEST(MacroAuc, ExcludesSingleClassVessels) {
  // Three records, vessel LM all negative.
  const std::vector<double> p = {0.9, 0.1, 0.2, 0.8, 0.1, 0.2, 0.9, 0.3, 0.5, 0.3, 0.4, 0.1};
  const Labels l = {1, 0, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
  const auto m = macro_auc(p, l);
  ASSERT_EQ(m.excluded.size(), 1u);
  EXPECT_EQ(m.excluded[0], Vessel::LM);
  EXPECT_TRUE(std::isnan(m.per_vessel[1]));
  EXPECT_NEAR(m.value, (m.per_vessel[0] + m.per_vessel[2] + m.per_vessel[3]) / 3, 1e-15);
}
