#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "stenograph/folds.hpp"
#include "support.hpp"

using namespace stenograph;
using stenograph::testing::make_record;

namespace {

Cohort random_cohort(std::size_t n_patients, std::uint64_t seed) {
  Rng rng(seed);
  Cohort c;
  for (std::size_t p = 0; p < n_patients; ++p) {
    std::array<Severity, kNumVessels> sev{};
    for (auto& s : sev) s = uniform(rng, 0.0, 1.0) < 0.2 ? Severity::severe : Severity::normal;
    const int n = uniform(rng, 0.0, 1.0) < 0.3 ? 1 + static_cast<int>(uniform_int(rng, 1, 2)) : 1;
    for (int k = 0; k < n; ++k) {
      auto r = make_record("E" + std::to_string(p) + "_" + std::to_string(k), "P" + std::to_string(p), sev, 8);
      c.records.push_back(r);
    }
  }
  return c;
}

}  // namespace

TEST(Folds, TenPatientsFiveFolds) {
  Cohort c;
  for (int p = 0; p < 10; ++p) c.records.push_back(make_record("e" + std::to_string(p), "p" + std::to_string(p)));
  const auto f = stratified_group_kfold(c, 5, 1);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(f.patients_in(k).size(), 2u);
}

TEST(Folds, PatientRecordsShareAFold) {
  Cohort c;
  c.records.push_back(make_record("a1", "A"));
  c.records.push_back(make_record("a2", "A"));
  c.records.push_back(make_record("a3", "A"));
  for (int p = 0; p < 6; ++p) c.records.push_back(make_record("b" + std::to_string(p), "B" + std::to_string(p)));
  const auto f = stratified_group_kfold(c, 3, 4);
  const auto val = f.validation_indices(c, f.fold_of("A"));
  EXPECT_TRUE(std::find(val.begin(), val.end(), 0u) != val.end());
  EXPECT_TRUE(std::find(val.begin(), val.end(), 1u) != val.end());
  EXPECT_TRUE(std::find(val.begin(), val.end(), 2u) != val.end());
}

TEST(Folds, RejectsTooFewPatients) {
  Cohort c;
  c.records.push_back(make_record("a", "A"));
  c.records.push_back(make_record("b", "B"));
  EXPECT_THROW(stratified_group_kfold(c, 3, 0), Error);
  EXPECT_THROW(stratified_group_kfold(c, 1, 0), Error);
}

TEST(Folds, NoLeakageAndBalancedPrevalenceOverSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Cohort c = random_cohort(200, seed);
    const std::size_t k = 5;
    const auto f = stratified_group_kfold(c, k, seed);
    ASSERT_EQ(f.fold_of_patient.size(), c.patients().size());
    std::array<double, kNumVessels> global{};
    for (const auto& r : c.records) {
      for (Vessel v : kVessels) global[index_of(v)] += r.labels.severe(v);
    }
    std::set<std::size_t> seen;
    for (std::size_t fold = 0; fold < k; ++fold) {
      const auto val = f.validation_indices(c, fold);
      const auto train = f.training_indices(c, fold);
      ASSERT_EQ(val.size() + train.size(), c.size());
      ASSERT_FALSE(val.empty());
      std::set<std::string> vp, tp;
      for (auto i : val) vp.insert(c.records[i].ecg.patient_id);
      for (auto i : train) tp.insert(c.records[i].ecg.patient_id);
      for (const auto& p : vp) ASSERT_EQ(tp.count(p), 0u) << "seed " << seed;
      for (auto i : val) ASSERT_TRUE(seen.insert(i).second);
      for (Vessel v : kVessels) {
        const double g = global[index_of(v)] / static_cast<double>(c.size());
        if (g == 0) continue;
        double pos = 0;
        for (auto i : val) pos += c.records[i].labels.severe(v);
        const double frac = pos / static_cast<double>(val.size());
        EXPECT_LE(std::abs(frac - g), 0.5 * g) << "seed " << seed << " fold " << fold;
      }
    }
    EXPECT_EQ(seen.size(), c.size());
  }
}

TEST(Folds, DeterministicPerSeed) {
  const Cohort c = random_cohort(60, 1);
  EXPECT_EQ(stratified_group_kfold(c, 5, 9).fold_of_patient, stratified_group_kfold(c, 5, 9).fold_of_patient);
}
