#pragma once

// Deterministic synthetic 12-lead ECGs built from sums of Gaussian P/Q/R/S/T
// bumps, with planted per-vessel ST/T lesion signatures and known R-peak
// positions.

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "stenograph/cohort.hpp"
#include "stenograph/digest.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

struct Wave {
  double amplitude_mv;
  double center_s;  // relative to the R peak
  double width_s;   // Gaussian sigma
};

struct BeatTemplate {
  enum WaveIndex { P = 0, Q = 1, R = 2, S = 3, T = 4 };
  std::array<Wave, 5> waves;
  // Per-lead projection of the P wave, QRS complex and T wave.
  std::array<std::array<double, 3>, kNumLeads> lead_weights;

  static BeatTemplate standard() {
    BeatTemplate b;
    b.waves = {Wave{0.15, -0.200, 0.025}, Wave{-0.12, -0.035, 0.010}, Wave{1.20, 0.0, 0.012},
               Wave{-0.25, 0.035, 0.010}, Wave{0.30, 0.300, 0.045}};
    b.lead_weights = {{
        {0.6, 0.7, 0.5},     // I
        {1.0, 1.0, 0.8},     // II
        {0.4, 0.4, 0.3},     // III
        {-0.8, -0.85, -0.65},  // aVR
        {0.1, 0.2, 0.15},    // aVL
        {0.7, 0.7, 0.55},    // aVF
        {0.3, -0.5, 0.2},    // V1
        {0.3, 0.3, 0.7},     // V2
        {0.3, 0.6, 0.8},     // V3
        {0.3, 1.1, 0.8},     // V4
        {0.3, 1.0, 0.6},     // V5
        {0.3, 0.8, 0.5},     // V6
    }};
    return b;
  }

  void validate() const {
    const double r = waves[R].amplitude_mv;
    if (!(r > std::abs(waves[Q].amplitude_mv) && r > std::abs(waves[S].amplitude_mv))) {
      fail(ErrorKind::config, "beat template: R amplitude must exceed |Q| and |S|");
    }
    for (std::size_t i = 1; i < waves.size(); ++i) {
      if (!(waves[i - 1].center_s < waves[i].center_s)) {
        fail(ErrorKind::config, "beat template: wave centers must be ordered P<Q<R<S<T");
      }
    }
  }
};

// ST window, relative to the R peak, used both for planting and measuring.
inline constexpr double kStWindowStart = 0.060;
inline constexpr double kStWindowEnd = 0.140;
inline constexpr double kStRamp = 0.020;

// 1 on the ST window with raised-cosine shoulders of kStRamp.
inline double st_plateau(double tau) {
  const double a = kStWindowStart - kStRamp, b = kStWindowEnd + kStRamp;
  if (tau <= a || tau >= b) return 0.0;
  if (tau < kStWindowStart) return 0.5 * (1.0 - std::cos(std::numbers::pi * (tau - a) / kStRamp));
  if (tau > kStWindowEnd) return 0.5 * (1.0 + std::cos(std::numbers::pi * (tau - kStWindowEnd) / kStRamp));
  return 1.0;
}

struct SynthEcgOptions {
  double heart_rate_bpm = 70.0;
  double duration_s = 10.0;
  double fs = 500.0;
  double noise_mv = 0.0;
  std::uint64_t seed = 0;
  double rr_jitter = 0.03;           // relative, at most 0.05
  double amplitude_scale = 1.0;
  double lead_weight_jitter = 0.0;   // relative, per lead and wave group
  std::array<double, kNumLeads> st_baseline_mv{};
  BeatTemplate beat = BeatTemplate::standard();
};

struct SyntheticEcg {
  EcgRecord record;
  std::vector<std::size_t> r_peaks;
};

inline SyntheticEcg synth_ecg(const SynthEcgOptions& opt) {
  if (!(opt.heart_rate_bpm >= 30.0 && opt.heart_rate_bpm <= 200.0)) {
    fail(ErrorKind::config, "synth_ecg: heart rate must be in [30, 200] bpm");
  }
  if (!(opt.fs >= 100.0)) fail(ErrorKind::config, "synth_ecg: fs must be >= 100 Hz");
  if (!(opt.duration_s > 0.0)) fail(ErrorKind::config, "synth_ecg: duration must be positive");
  if (!(opt.noise_mv >= 0.0)) fail(ErrorKind::config, "synth_ecg: noise must be non-negative");
  if (!(opt.rr_jitter >= 0.0 && opt.rr_jitter <= 0.05)) {
    fail(ErrorKind::config, "synth_ecg: RR jitter must be in [0, 0.05]");
  }
  opt.beat.validate();

  const std::size_t n = static_cast<std::size_t>(std::llround(opt.duration_s * opt.fs));
  SyntheticEcg out;
  out.record.fs = opt.fs;
  out.record.signal = Signal(n);
  Signal& sig = out.record.signal;

  Rng rr_rng = make_rng(opt.seed, {hash_tag("rr")});
  Rng lead_rng = make_rng(opt.seed, {hash_tag("lead-weights")});
  Rng noise_rng = make_rng(opt.seed, {hash_tag("noise")});

  auto weights = opt.beat.lead_weights;
  if (opt.lead_weight_jitter > 0.0) {
    for (auto& lw : weights) {
      for (double& w : lw) w *= 1.0 + uniform(lead_rng, -opt.lead_weight_jitter, opt.lead_weight_jitter);
    }
  }

  const double rr = 60.0 / opt.heart_rate_bpm;
  double t = 0.3 + uniform(rr_rng, 0.0, 0.5 * rr);
  while (true) {
    const auto idx = static_cast<std::size_t>(std::llround(t * opt.fs));
    if (idx >= n) break;
    out.r_peaks.push_back(idx);
    t += rr * (1.0 + uniform(rr_rng, -opt.rr_jitter, opt.rr_jitter));
  }

  std::vector<double> bump;
  for (std::size_t r : out.r_peaks) {
    const double tr = static_cast<double>(r) / opt.fs;
    for (std::size_t w = 0; w < opt.beat.waves.size(); ++w) {
      const Wave& wave = opt.beat.waves[w];
      const std::size_t group = w == BeatTemplate::P ? 0 : (w == BeatTemplate::T ? 2 : 1);
      const double c = tr + wave.center_s;
      const double half = 5.0 * wave.width_s;
      // Support is fixed relative to the R index so every beat is truncated identically.
      const auto ri = static_cast<std::ptrdiff_t>(r);
      const auto lo = ri + static_cast<std::ptrdiff_t>(std::ceil((wave.center_s - half) * opt.fs));
      const auto hi = ri + static_cast<std::ptrdiff_t>(std::floor((wave.center_s + half) * opt.fs));
      for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
           i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n) - 1); ++i) {
        const double d = (static_cast<double>(i) / opt.fs - c) / wave.width_s;
        const double g = opt.amplitude_scale * wave.amplitude_mv * std::exp(-0.5 * d * d);
        for (std::size_t l = 0; l < kNumLeads; ++l) sig.lead(l)[static_cast<std::size_t>(i)] += weights[l][group] * g;
      }
    }
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      if (opt.st_baseline_mv[l] == 0.0) continue;
      const auto ri = static_cast<std::ptrdiff_t>(r);
      const auto lo = ri + static_cast<std::ptrdiff_t>(std::ceil((kStWindowStart - kStRamp) * opt.fs));
      const auto hi = ri + static_cast<std::ptrdiff_t>(std::floor((kStWindowEnd + kStRamp) * opt.fs));
      for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
           i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n) - 1); ++i) {
        sig.lead(l)[static_cast<std::size_t>(i)] +=
            opt.st_baseline_mv[l] * st_plateau(static_cast<double>(i) / opt.fs - tr);
      }
    }
  }

  if (opt.noise_mv > 0.0) {
    std::normal_distribution<double> noise(0.0, opt.noise_mv);
    for (double& v : sig.data) v += noise(noise_rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lesion signatures

struct TerritoryLead {
  std::size_t lead;
  double sign;  // +1 elevation, -1 depression
};

struct LesionSignature {
  Vessel vessel;
  std::vector<TerritoryLead> leads;
  std::array<double, 4> st_offset_mv;  // by grade 0..3
  std::array<double, 4> t_change_mv;   // T-wave reduction, by grade 0..3
};

inline const LesionSignature& lesion_signature(Vessel v) {
  static const std::array<double, 4> st = {0.0, 0.04, 0.08, 0.20};
  static const std::array<double, 4> tw = {0.0, 0.04, 0.08, 0.20};
  static const std::array<LesionSignature, kNumVessels> table = {{
      {Vessel::RCA, {{lead::II, 1.0}, {lead::III, 1.0}, {lead::aVF, 1.0}}, st, tw},
      {Vessel::LM,
       {{lead::aVR, 1.0}, {lead::I, -1.0}, {lead::II, -1.0}, {lead::V4, -1.0}, {lead::V5, -1.0},
        {lead::V6, -1.0}},
       st, tw},
      {Vessel::LAD, {{lead::V1, 1.0}, {lead::V2, 1.0}, {lead::V3, 1.0}, {lead::V4, 1.0}}, st, tw},
      {Vessel::LCX, {{lead::I, 1.0}, {lead::aVL, 1.0}, {lead::V5, 1.0}, {lead::V6, 1.0}}, st, tw},
  }};
  return table[index_of(v)];
}

// Adds the vessel's ST offset and T-wave change around every R peak, in the
// territory leads only. Grade 0 returns the record unchanged.
inline EcgRecord plant_lesion(EcgRecord record, std::span<const std::size_t> r_peaks, Vessel vessel,
                              StenosisGrade grade, std::uint64_t seed,
                              const BeatTemplate& beat = BeatTemplate::standard()) {
  const int g = grade_code(grade);
  if (g == 0) return record;
  const LesionSignature& sig = lesion_signature(vessel);
  Rng rng = make_rng(seed, {hash_tag("lesion"), index_of(vessel)});
  const double factor = uniform(rng, 0.8, 1.2);
  const double st = sig.st_offset_mv[static_cast<std::size_t>(g)] * factor;
  const double tw = sig.t_change_mv[static_cast<std::size_t>(g)] * factor;
  const Wave& t_wave = beat.waves[BeatTemplate::T];
  const double fs = record.fs;
  const auto n = static_cast<std::ptrdiff_t>(record.signal.n_samples);
  for (std::size_t r : r_peaks) {
    const double tr = static_cast<double>(r) / fs;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil((tr + kStWindowStart - kStRamp) * fs));
    const auto hi = static_cast<std::ptrdiff_t>(
        std::floor((tr + t_wave.center_s + 5.0 * t_wave.width_s) * fs));
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0); i <= std::min(hi, n - 1); ++i) {
      const double tau = static_cast<double>(i) / fs - tr;
      const double d = (tau - t_wave.center_s) / t_wave.width_s;
      const double delta = st * st_plateau(tau) - tw * std::exp(-0.5 * d * d);
      for (const TerritoryLead& tl : sig.leads) {
        record.signal.lead(tl.lead)[static_cast<std::size_t>(i)] += tl.sign * delta;
      }
    }
  }
  return record;
}

// ---------------------------------------------------------------------------
// Cohorts

struct SynthCohortOptions {
  std::size_t n_patients = 100;
  // RCA, LM, LAD, LCX
  std::array<double, kNumVessels> prevalence = {0.20, 0.02, 0.20, 0.20};
  int followup_days = 365;
  std::uint64_t seed = 0;
  double fs = 500.0;
  double duration_s = 10.0;
  double noise_mv = 0.02;
  double multi_record_prob = 0.1;
  // Distribution of grades 0/1/2 among non-severe vessels.
  std::array<double, 3> negative_grade_weights = {0.55, 0.30, 0.15};
  // One-year event probability at zero summed grade; hazard grows by
  // exp(hazard_per_grade * sum of grades).
  double base_event_prob = 0.04;
  double hazard_per_grade = 0.4;
  double dropout_prob = 0.1;
};

struct SyntheticCohort {
  Cohort cohort;
  std::vector<std::vector<std::size_t>> r_peaks;  // per record
};

inline SyntheticCohort synth_cohort(const SynthCohortOptions& opt) {
  for (double p : opt.prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::config, "prevalence must be in [0, 1]");
  }
  if (opt.followup_days < 1) fail(ErrorKind::config, "follow-up window must be >= 1 day");

  constexpr std::int64_t kBase = 1546300800;  // 2019-01-01T00:00:00Z
  SyntheticCohort out;
  for (std::size_t p = 0; p < opt.n_patients; ++p) {
    Rng rng = make_rng(opt.seed, {hash_tag("patient"), p});
    char pid[16];
    std::snprintf(pid, sizeof pid, "P%05zu", p);

    VesselLabels labels;
    int grade_sum = 0;
    int max_grade = 0;
    for (Vessel v : kVessels) {
      int g = 3;
      if (!(uniform(rng, 0.0, 1.0) < opt.prevalence[index_of(v)])) {
        std::discrete_distribution<int> neg(opt.negative_grade_weights.begin(),
                                            opt.negative_grade_weights.end());
        g = neg(rng);
      }
      Severity s = static_cast<Severity>(g);
      if (g == 3 && uniform(rng, 0.0, 1.0) < 0.3) s = Severity::occluded;
      labels.severity[index_of(v)] = s;
      grade_sum += g;
      max_grade = std::max(max_grade, g);
    }
    labels.ccta_time = Timestamp{kBase + 60 * uniform_int(rng, 0, 3 * 365 * 24 * 60)};
    const double age = static_cast<double>(uniform_int(rng, 35, 85));
    const Sex sex = uniform(rng, 0.0, 1.0) < 0.5 ? Sex::male : Sex::female;

    // Follow-up starts at the ECG; events arrive sooner with higher grades.
    const double lambda0 = -std::log(1.0 - opt.base_event_prob) / 365.0;
    const double lambda = lambda0 * std::exp(opt.hazard_per_grade * grade_sum);
    const double event_time = std::exponential_distribution<double>(lambda)(rng);
    double censor_time = opt.followup_days;
    if (uniform(rng, 0.0, 1.0) < opt.dropout_prob) {
      censor_time = uniform(rng, std::min(30.0, static_cast<double>(opt.followup_days)), opt.followup_days);
    }
    FollowUp fu;
    fu.event = event_time <= censor_time;
    fu.days = std::clamp(static_cast<int>(std::ceil(fu.event ? event_time : censor_time)), 1,
                         opt.followup_days);

    const std::size_t n_records = uniform(rng, 0.0, 1.0) < opt.multi_record_prob ? 2 : 1;
    const std::int64_t gap = uniform(rng, 0.0, 1.0) < 0.5 ? uniform_int(rng, 10 * 60, 3 * 3600)
                                                           : uniform_int(rng, 3 * 3600 + 1, 60 * 86400);
    const double normal_prob = max_grade >= 2 ? 0.35 : 0.8;
    for (std::size_t k = 0; k < n_records; ++k) {
      const std::uint64_t rec_seed = derive_seed(opt.seed, {hash_tag("record"), p, k});
      Rng rrng(rec_seed);
      SynthEcgOptions eo;
      eo.heart_rate_bpm = uniform(rrng, 50.0, 100.0);
      eo.duration_s = opt.duration_s;
      eo.fs = opt.fs;
      eo.noise_mv = opt.noise_mv;
      eo.seed = derive_seed(rec_seed, {hash_tag("ecg")});
      eo.amplitude_scale = uniform(rrng, 0.8, 1.2);
      eo.lead_weight_jitter = 0.15;
      for (double& b : eo.st_baseline_mv) b = normal(rrng, 0.0, 0.02);
      SyntheticEcg ecg = synth_ecg(eo);
      for (Vessel v : kVessels) {
        ecg.record = plant_lesion(std::move(ecg.record), ecg.r_peaks, v, labels.grade(v),
                                  derive_seed(rec_seed, {hash_tag("plant")}), eo.beat);
      }
      char eid[24];
      std::snprintf(eid, sizeof eid, "E%05zu_%zu", p, k);
      ecg.record.ecg_id = eid;
      ecg.record.patient_id = pid;
      std::int64_t offset = gap;
      if (k > 0) offset += uniform_int(rrng, 1, 30) * 86400;
      ecg.record.ecg_time = Timestamp{labels.ccta_time.seconds - offset};
      ecg.record.age = age;
      ecg.record.sex = sex;
      ecg.record.normal_ecg = uniform(rrng, 0.0, 1.0) < normal_prob;
      out.cohort.records.push_back(CohortRecord{std::move(ecg.record), labels, fu});
      out.r_peaks.push_back(std::move(ecg.r_peaks));
    }
  }
  return out;
}

inline std::string cohort_digest(const Cohort& cohort) {
  Digest d;
  for (const auto& r : cohort.records) {
    d.update(r.ecg.ecg_id).update(r.ecg.patient_id);
    d.update(static_cast<std::uint64_t>(r.ecg.ecg_time.seconds));
    d.update(static_cast<std::uint64_t>(r.labels.ccta_time.seconds));
    for (Severity s : r.labels.severity) d.update(static_cast<std::uint64_t>(s));
    if (r.follow_up) {
      d.update(static_cast<std::uint64_t>(r.follow_up->event));
      d.update(static_cast<std::uint64_t>(r.follow_up->days));
    }
    d.update(std::span<const double>(&r.ecg.fs, 1));
    d.update(r.ecg.signal.data);
  }
  return d.hex();
}

}  // namespace stenograph
