#include <gtest/gtest.h>

#include "stenograph/evaluate.hpp"
#include "support.hpp"

using namespace stenograph;

namespace {

struct Fixture {
  Cohort cohort;
  std::vector<double> probs;
};

// Severities drawn at random; probabilities track grade plus noise. LM
// positives only occur in records flagged as abnormal ECGs.
Fixture make_fixture(std::size_t n, std::uint64_t seed) {
  Fixture f;
  Rng rng = make_rng(seed, {hash_tag("eval-fixture")});
  std::uniform_int_distribution<int> sev(0, 4);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<Severity, kNumVessels> s{};
    for (Vessel v : kVessels) s[index_of(v)] = static_cast<Severity>(sev(rng));
    const bool abnormal = i % 3 == 0;
    if (!abnormal) s[index_of(Vessel::LM)] = Severity::normal;
    auto r = stenograph::testing::make_record("e" + std::to_string(i), "p" + std::to_string(i), s);
    r.ecg.normal_ecg = !abnormal;
    for (Vessel v : kVessels) {
      const double g = grade_code(r.labels.grade(v));
      f.probs.push_back(std::clamp(0.15 + 0.2 * g + 0.15 * normal(rng), 0.0, 1.0));
    }
    f.cohort.records.push_back(std::move(r));
  }
  return f;
}

EvalOptions small_options() {
  EvalOptions o;
  o.n_boot = 200;
  o.seed = 11;
  o.subgroups = {Subgroup::normal_ecg, Subgroup::male};
  return o;
}

}  // namespace

TEST(Evaluate, FullReportHasEveryBlock) {
  const auto f = make_fixture(150, 1);
  const auto rep = evaluate_predictions(f.probs, f.cohort, small_options());
  ASSERT_EQ(rep.groups.size(), 3u);
  EXPECT_EQ(rep.groups[0].name, "all");
  const auto& all = rep.group("all");
  ASSERT_EQ(all.vessels.size(), kNumVessels);
  for (const auto& v : all.vessels) {
    EXPECT_EQ(v.n, 150u);
    ASSERT_TRUE(v.auc && v.ci && v.calibration && v.spearman);
    EXPECT_FALSE(v.roc.empty());
    EXPECT_TRUE(v.undefined.empty());
    EXPECT_LE(v.ci->lo, *v.auc);
    EXPECT_GE(v.ci->hi, *v.auc);
    EXPECT_EQ(v.calibration->bins.size(), 10u);
    EXPECT_EQ(v.grades.size(), 4u);
    EXPECT_GT(v.spearman->rho, 0.0);
  }
  const auto j = to_json(rep);
  EXPECT_EQ(j["groups"].size(), 3u);
  EXPECT_EQ(j["groups"][0]["vessels"].size(), kNumVessels);
}

TEST(Evaluate, SubgroupWithoutLmPositivesIsolatesUndefined) {
  const auto f = make_fixture(150, 2);
  const auto rep = evaluate_predictions(f.probs, f.cohort, small_options());
  const auto& g = rep.group("normal_ecg");
  EXPECT_EQ(g.n, 100u);
  for (const auto& v : g.vessels) {
    if (v.vessel == Vessel::LM) {
      EXPECT_EQ(v.n_pos, 0u);
      EXPECT_FALSE(v.auc.has_value());
      EXPECT_FALSE(v.undefined.empty());
    } else {
      EXPECT_TRUE(v.auc.has_value());
      EXPECT_TRUE(v.undefined.empty());
    }
  }
  EXPECT_TRUE(rep.group("all").vessels[index_of(Vessel::LM)].auc.has_value());
  EXPECT_EQ(to_json(rep)["groups"][1]["vessels"][index_of(Vessel::LM)]["auc"], "undefined");
}

TEST(Evaluate, DuplicatedCohortKeepsScaleFreeMetrics) {
  const auto f = make_fixture(120, 3);
  Fixture d = f;
  d.cohort.records.insert(d.cohort.records.end(), f.cohort.records.begin(), f.cohort.records.end());
  d.probs.insert(d.probs.end(), f.probs.begin(), f.probs.end());
  EvalOptions o = small_options();
  o.subgroups.clear();
  const auto a = evaluate_predictions(f.probs, f.cohort, o).group("all");
  const auto b = evaluate_predictions(d.probs, d.cohort, o).group("all");
  for (std::size_t v = 0; v < kNumVessels; ++v) {
    EXPECT_NEAR(*a.vessels[v].auc, *b.vessels[v].auc, 1e-12);
    EXPECT_NEAR(a.vessels[v].calibration->brier, b.vessels[v].calibration->brier, 1e-12);
    EXPECT_NEAR(a.vessels[v].spearman->rho, b.vessels[v].spearman->rho, 1e-12);
  }
}

TEST(Evaluate, EmptyCohortRejected) {
  const Cohort empty;
  EXPECT_THROW(evaluate_predictions({}, empty), Error);
}

TEST(Evaluate, ShapeMismatchRejected) {
  const auto f = make_fixture(10, 4);
  std::vector<double> p(f.probs.begin(), f.probs.end() - 1);
  EXPECT_THROW(evaluate_predictions(p, f.cohort), Error);
}

TEST(Evaluate, DeterministicPerSeed) {
  const auto f = make_fixture(80, 5);
  const auto a = to_json(evaluate_predictions(f.probs, f.cohort, small_options()));
  const auto b = to_json(evaluate_predictions(f.probs, f.cohort, small_options()));
  EXPECT_EQ(a.dump(), b.dump());
}
