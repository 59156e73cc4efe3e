#include <gtest/gtest.h>

#include <cmath>

#include "stenograph/synthgen.hpp"

using namespace stenograph;

namespace {

SyntheticEcg make_ecg(double bpm, std::uint64_t seed, double noise = 0.0) {
  SynthEcgOptions o;
  o.heart_rate_bpm = bpm;
  o.duration_s = 10.0;
  o.fs = 500.0;
  o.noise_mv = noise;
  o.seed = seed;
  return synth_ecg(o);
}

double st_mean(const EcgRecord& r, std::span<const std::size_t> peaks, std::size_t lead) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t p : peaks) {
    const auto lo = p + static_cast<std::size_t>(std::lround(kStWindowStart * r.fs));
    const auto hi = p + static_cast<std::size_t>(std::lround(kStWindowEnd * r.fs));
    for (std::size_t i = lo; i <= hi && i < r.signal.n_samples; ++i) {
      sum += r.signal.lead(lead)[i];
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST(SynthEcg, SixtyBpmPeakCountAndSpacing) {
  const auto e = make_ecg(60, 1);
  EXPECT_GE(e.r_peaks.size(), 9u);
  EXPECT_LE(e.r_peaks.size(), 11u);
  for (std::size_t i = 1; i < e.r_peaks.size(); ++i) {
    const double gap = static_cast<double>(e.r_peaks[i] - e.r_peaks[i - 1]);
    EXPECT_NEAR(gap, 500.0, 500.0 * 0.05 + 1);
  }
}

TEST(SynthEcg, ShapeAndDeterminism) {
  const auto a = make_ecg(72, 5);
  const auto b = make_ecg(72, 5);
  EXPECT_EQ(a.record.signal.n_samples, 5000u);
  EXPECT_EQ(a.record.signal.data.size(), 12u * 5000u);
  EXPECT_EQ(a.record.signal.data, b.record.signal.data);
  EXPECT_EQ(a.r_peaks, b.r_peaks);
  EXPECT_NE(make_ecg(72, 6).r_peaks, a.r_peaks);
}

TEST(SynthEcg, RejectsOutOfRangeArguments) {
  SynthEcgOptions o;
  o.heart_rate_bpm = 29;
  EXPECT_THROW(synth_ecg(o), Error);
  o.heart_rate_bpm = 201;
  EXPECT_THROW(synth_ecg(o), Error);
  o.heart_rate_bpm = 60;
  o.fs = 99;
  EXPECT_THROW(synth_ecg(o), Error);
  o.fs = 500;
  o.noise_mv = -1;
  EXPECT_THROW(synth_ecg(o), Error);
}

TEST(SynthEcg, PeaksAreLeadTwoArgmaxWithinBeat) {
  for (double bpm : {45.0, 70.0, 120.0, 180.0}) {
    const auto e = make_ecg(bpm, 11);
    const auto x = e.record.signal.lead(lead::II);
    const auto half = static_cast<std::ptrdiff_t>(0.4 * 500 * 60.0 / bpm);
    for (std::size_t p : e.r_peaks) {
      const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(p) - half);
      const auto hi = std::min<std::ptrdiff_t>(5000, static_cast<std::ptrdiff_t>(p) + half);
      const auto arg = std::max_element(x.begin() + lo, x.begin() + hi) - x.begin();
      EXPECT_LE(std::abs(arg - static_cast<std::ptrdiff_t>(p)), 2) << bpm;
    }
  }
}

TEST(PlantLesion, GradeZeroIsIdentity) {
  const auto e = make_ecg(70, 2, 0.02);
  for (Vessel v : kVessels) {
    EXPECT_EQ(plant_lesion(e.record, e.r_peaks, v, StenosisGrade::none, 3).signal.data, e.record.signal.data);
  }
}

TEST(PlantLesion, ConfinedToTerritoryLeads) {
  const auto e = make_ecg(70, 2, 0.02);
  for (Vessel v : kVessels) {
    const auto planted = plant_lesion(e.record, e.r_peaks, v, StenosisGrade::severe, 3);
    std::array<bool, kNumLeads> territory{};
    for (const auto& tl : lesion_signature(v).leads) territory[tl.lead] = true;
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      double rms = 0;
      for (std::size_t i = 0; i < 5000; ++i) {
        const double d = planted.signal.lead(l)[i] - e.record.signal.lead(l)[i];
        rms += d * d;
      }
      if (territory[l]) {
        EXPECT_GT(rms, 0.0) << vessel_name(v) << " lead " << l;
      } else {
        EXPECT_EQ(rms, 0.0) << vessel_name(v) << " lead " << l;
      }
    }
  }
}

TEST(PlantLesion, RcaShiftsInferiorLeadsOnly) {
  const auto e = make_ecg(70, 4, 0.02);
  const auto planted = plant_lesion(e.record, e.r_peaks, Vessel::RCA, StenosisGrade::severe, 8);
  for (std::size_t l : {lead::II, lead::III, lead::aVF}) {
    EXPECT_GT(st_mean(planted, e.r_peaks, l) - st_mean(e.record, e.r_peaks, l), 0.1);
  }
  EXPECT_EQ(st_mean(planted, e.r_peaks, lead::V2), st_mean(e.record, e.r_peaks, lead::V2));
}

TEST(PlantLesion, EffectMonotoneInGrade) {
  const auto e = make_ecg(70, 4);
  for (Vessel v : kVessels) {
    const std::size_t l = lesion_signature(v).leads[0].lead;
    double prev = 0.0;
    for (int g = 0; g <= 3; ++g) {
      const auto planted = plant_lesion(e.record, e.r_peaks, v, grade_from_code(g), 8);
      const double shift = std::abs(st_mean(planted, e.r_peaks, l) - st_mean(e.record, e.r_peaks, l));
      if (g > 0) {
        EXPECT_GT(shift, prev) << vessel_name(v) << " grade " << g;
      }
      prev = shift;
    }
  }
}

TEST(SynthCohort, PositiveCountWithinBinomialInterval) {
  SynthCohortOptions o;
  o.n_patients = 1000;
  o.fs = 100;
  o.duration_s = 2;
  o.multi_record_prob = 0;
  o.seed = 7;
  const auto c = synth_cohort(o).cohort;
  ASSERT_EQ(c.size(), 1000u);
  std::size_t pos = 0;
  for (const auto& r : c.records) pos += r.labels.severe(Vessel::RCA);
  EXPECT_GE(pos, 155u);
  EXPECT_LE(pos, 247u);
}

TEST(SynthCohort, ZeroPrevalenceHasNoSevereLabels) {
  SynthCohortOptions o;
  o.n_patients = 200;
  o.fs = 100;
  o.duration_s = 2;
  o.prevalence = {0, 0, 0, 0};
  for (const auto& r : synth_cohort(o).cohort.records) {
    for (Vessel v : kVessels) {
      EXPECT_FALSE(r.labels.severe(v));
      EXPECT_LE(grade_code(r.labels.grade(v)), 2);
    }
  }
}

TEST(SynthCohort, PairingAndReproducibility) {
  SynthCohortOptions o;
  o.n_patients = 150;
  o.fs = 100;
  o.duration_s = 2;
  o.multi_record_prob = 0.5;
  o.seed = 3;
  const auto a = synth_cohort(o);
  EXPECT_GT(a.cohort.size(), 150u);
  EXPECT_NO_THROW(a.cohort.validate());
  for (const auto& r : a.cohort.records) {
    EXPECT_LT(r.ecg.ecg_time, r.labels.ccta_time);
    ASSERT_TRUE(r.follow_up.has_value());
    EXPECT_GE(r.follow_up->days, 1);
    EXPECT_LE(r.follow_up->days, o.followup_days);
  }
  EXPECT_EQ(cohort_digest(a.cohort), cohort_digest(synth_cohort(o).cohort));
  o.seed = 4;
  EXPECT_NE(cohort_digest(a.cohort), cohort_digest(synth_cohort(o).cohort));
}

TEST(SynthCohort, HigherGradesFailSooner) {
  SynthCohortOptions o;
  o.n_patients = 2000;
  o.fs = 100;
  o.duration_s = 1;
  o.multi_record_prob = 0;
  o.seed = 1;
  const auto c = synth_cohort(o).cohort;
  double ev_hi = 0, n_hi = 0, ev_lo = 0, n_lo = 0;
  for (const auto& r : c.records) {
    int sum = 0;
    for (Vessel v : kVessels) sum += grade_code(r.labels.grade(v));
    (sum >= 6 ? ev_hi : ev_lo) += r.follow_up->event;
    (sum >= 6 ? n_hi : n_lo) += 1;
  }
  EXPECT_GT(ev_hi / n_hi, 2.0 * ev_lo / n_lo);
}
