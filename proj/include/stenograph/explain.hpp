#pragma once

// Waveform-level interpretability: Pan-Tompkins R-peak detection on lead II,
// fixed-window beat segmentation, per-beat z-scoring, and per-risk-group
// mean/std waveforms with an ST-window separation statistic.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stenograph/cohort.hpp"
#include "stenograph/survival.hpp"

namespace stenograph {

inline constexpr std::size_t kBeatSamples = 256;
inline constexpr double kBeatPre = 0.250;   // s before R
inline constexpr double kBeatPost = 0.400;  // s after R

// Beat-grid time (s, relative to R) of sample k.
inline double beat_time(std::size_t k) {
  return -kBeatPre + (kBeatPre + kBeatPost) * static_cast<double>(k) / static_cast<double>(kBeatSamples - 1);
}

// Beat-grid samples covering R+60 ms .. R+140 ms.
struct SampleRange {
  std::size_t first;
  std::size_t last;  // inclusive
};

inline SampleRange st_window_samples() {
  const double scale = static_cast<double>(kBeatSamples - 1) / (kBeatPre + kBeatPost);
  return {static_cast<std::size_t>(std::ceil((kBeatPre + 0.060) * scale - 1e-9)),
          static_cast<std::size_t>(std::floor((kBeatPre + 0.140) * scale + 1e-9))};
}

namespace detail {

struct Biquad {
  double b0, b1, b2, a1, a2;  // normalised by a0

  static Biquad butterworth(bool highpass, double cutoff_hz, double fs) {
    const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    if (highpass) return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
    return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }

  void run(std::vector<double>& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
      const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
};

// Zero-phase filtering: forward and backward passes over an odd-reflected
// extension of the signal.
inline std::vector<double> filtfilt(std::span<const double> x, const std::vector<Biquad>& stages, std::size_t pad) {
  const std::size_t n = x.size();
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  for (const auto& s : stages) s.run(ext);
  std::reverse(ext.begin(), ext.end());
  for (const auto& s : stages) s.run(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace detail

// Pan-Tompkins-style detector on lead II: 5-15 Hz band-pass, five-point
// derivative, squaring, 150 ms moving-window integration, adaptive signal /
// noise thresholds with a 200 ms refractory period and RR searchback. Peaks
// are refined to the raw lead II maximum within +-50 ms.
inline std::vector<std::size_t> detect_r_peaks(std::span<const double> lead_ii, double fs) {
  if (!(fs >= 100.0)) fail(ErrorKind::data, "R-peak detection needs fs >= 100 Hz, got " + std::to_string(fs));
  const std::size_t n = lead_ii.size();
  if (static_cast<double>(n) < 2.0 * fs) fail(ErrorKind::data, "R-peak detection needs at least 2 s of signal");

  const std::vector<detail::Biquad> band = {detail::Biquad::butterworth(true, 5.0, fs),
                                            detail::Biquad::butterworth(false, 15.0, fs)};
  const auto filtered = detail::filtfilt(lead_ii, band, static_cast<std::size_t>(fs / 2));

  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (-filtered[i - 2] - 2.0 * filtered[i - 1] + 2.0 * filtered[i + 1] + filtered[i + 2]) / 8.0;
    energy[i] = d * d;
  }
  const std::size_t half = static_cast<std::size_t>(std::lround(0.150 * fs)) / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> mwi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0, hi = std::min(n, i + half + 1);
    mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(2 * half + 1);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0) candidates.push_back(i);
  }
  if (candidates.empty()) return {};

  const auto learn = static_cast<std::size_t>(2.0 * fs);
  double spki = 0.25 * *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn));
  double npki = 0.0;
  for (std::size_t i = 0; i < learn; ++i) npki += mwi[i];
  npki = 0.5 * npki / static_cast<double>(learn);
  auto threshold = [&] { return npki + 0.25 * (spki - npki); };
  const auto refractory = static_cast<std::size_t>(std::lround(0.200 * fs));

  std::vector<std::size_t> qrs;
  auto rr_mean = [&]() -> std::optional<double> {
    if (qrs.size() < 2) return std::nullopt;
    const std::size_t k = std::min<std::size_t>(8, qrs.size() - 1);
    return static_cast<double>(qrs.back() - qrs[qrs.size() - 1 - k]) / static_cast<double>(k);
  };

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const std::size_t c = candidates[ci];
    // Searchback for a missed beat when the gap exceeds 1.66 RR.
    if (const auto rr = rr_mean(); rr && static_cast<double>(c - qrs.back()) > 1.66 * *rr) {
      std::optional<std::size_t> best;
      for (std::size_t cj = 0; cj < ci; ++cj) {
        const std::size_t p = candidates[cj];
        if (p < qrs.back() + refractory || c < p + refractory) continue;
        if (mwi[p] > 0.5 * threshold() && (!best || mwi[p] > mwi[*best])) best = p;
      }
      if (best) {
        qrs.push_back(*best);
        spki = 0.25 * mwi[*best] + 0.75 * spki;
      }
    }
    const double v = mwi[c];
    if (v > threshold()) {
      if (!qrs.empty() && c - qrs.back() < refractory) {
        if (v > mwi[qrs.back()]) qrs.back() = c;
      } else {
        qrs.push_back(c);
      }
      spki = 0.125 * v + 0.875 * spki;
    } else {
      npki = 0.125 * v + 0.875 * npki;
    }
  }

  const auto reach = static_cast<std::size_t>(std::lround(0.050 * fs));
  std::vector<std::size_t> peaks;
  for (std::size_t q : qrs) {
    const std::size_t lo = q >= reach ? q - reach : 0, hi = std::min(n - 1, q + reach);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (lead_ii[i] > lead_ii[best]) best = i;
    }
    if (!peaks.empty() && best < peaks.back() + refractory) {
      if (lead_ii[best] > lead_ii[peaks.back()]) peaks.back() = best;
      continue;
    }
    peaks.push_back(best);
  }
  return peaks;
}

inline std::vector<std::size_t> detect_r_peaks(const EcgRecord& record) {
  return detect_r_peaks(record.signal.lead(lead::II), record.fs);
}

// beats x 12 leads x 256 samples, each (beat, lead) trace z-scored.
struct BeatMatrix {
  std::size_t n_beats = 0;
  std::vector<std::size_t> r_peaks;  // peaks that produced a beat
  std::vector<double> data;

  std::span<const double> trace(std::size_t beat, std::size_t lead) const {
    return {data.data() + (beat * kNumLeads + lead) * kBeatSamples, kBeatSamples};
  }
};

inline BeatMatrix segment_beats(const Signal& signal, double fs, std::span<const std::size_t> r_peaks) {
  BeatMatrix out;
  const double last = static_cast<double>(signal.n_samples) - 1.0;
  for (std::size_t r : r_peaks) {
    const double start = static_cast<double>(r) - kBeatPre * fs;
    const double end = static_cast<double>(r) + kBeatPost * fs;
    if (start < 0.0 || end > last) continue;
    out.r_peaks.push_back(r);
    ++out.n_beats;
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      const auto x = signal.lead(l);
      std::array<double, kBeatSamples> trace;
      for (std::size_t k = 0; k < kBeatSamples; ++k) {
        const double t = static_cast<double>(r) + beat_time(k) * fs;
        const auto i0 = static_cast<std::size_t>(std::floor(t));
        const std::size_t i1 = std::min(i0 + 1, signal.n_samples - 1);
        const double frac = t - static_cast<double>(i0);
        trace[k] = x[i0] + frac * (x[i1] - x[i0]);
      }
      double mean = 0.0;
      for (double v : trace) mean += v;
      mean /= static_cast<double>(kBeatSamples);
      double var = 0.0;
      for (double v : trace) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(kBeatSamples));
      for (double v : trace) out.data.push_back(sd < 1e-8 ? 0.0 : (v - mean) / sd);
    }
  }
  return out;
}

inline BeatMatrix segment_beats(const EcgRecord& record, std::span<const std::size_t> r_peaks) {
  return segment_beats(record.signal, record.fs, r_peaks);
}

struct GroupWaveform {
  RiskGroup group{};
  std::size_t records = 0;
  std::size_t beats = 0;
  std::array<std::array<double, kBeatSamples>, kNumLeads> mean{};
  std::array<std::array<double, kBeatSamples>, kNumLeads> std{};
  // Per record, mean ST-window level of its average beat, per lead.
  std::array<std::vector<double>, kNumLeads> st_record_means;
};

struct WaveformSummary {
  std::vector<GroupWaveform> groups;  // high first, then low; empty groups omitted
  std::vector<std::string> warnings;

  const GroupWaveform* find(RiskGroup g) const {
    for (const auto& w : groups) {
      if (w.group == g) return &w;
    }
    return nullptr;
  }
};

// Streaming per-group accumulation (Welford per lead and sample).
class WaveformAccumulator {
 public:
  void add(const BeatMatrix& beats, RiskGroup group) {
    if (beats.n_beats == 0) return;
    State& s = state_[group == RiskGroup::high ? 0 : 1];
    ++s.records;
    const auto st = st_window_samples();
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      double st_sum = 0.0;
      for (std::size_t b = 0; b < beats.n_beats; ++b) {
        const auto tr = beats.trace(b, l);
        for (std::size_t k = st.first; k <= st.last; ++k) st_sum += tr[k];
      }
      s.st_record_means[l].push_back(st_sum / static_cast<double>(beats.n_beats * (st.last - st.first + 1)));
    }
    for (std::size_t b = 0; b < beats.n_beats; ++b) {
      ++s.beats;
      const double n = static_cast<double>(s.beats);
      for (std::size_t l = 0; l < kNumLeads; ++l) {
        const auto tr = beats.trace(b, l);
        for (std::size_t k = 0; k < kBeatSamples; ++k) {
          const double delta = tr[k] - s.mean[l][k];
          s.mean[l][k] += delta / n;
          s.m2[l][k] += delta * (tr[k] - s.mean[l][k]);
        }
      }
    }
  }

  WaveformSummary summary() const {
    WaveformSummary out;
    for (int g = 0; g < 2; ++g) {
      const State& s = state_[g];
      const RiskGroup group = g == 0 ? RiskGroup::high : RiskGroup::low;
      if (s.beats == 0) {
        out.warnings.push_back(std::string(risk_group_name(group)) + "-risk group is empty; omitted");
        continue;
      }
      GroupWaveform w;
      w.group = group;
      w.records = s.records;
      w.beats = s.beats;
      w.mean = s.mean;
      for (std::size_t l = 0; l < kNumLeads; ++l) {
        for (std::size_t k = 0; k < kBeatSamples; ++k) {
          w.std[l][k] = std::sqrt(std::max(0.0, s.m2[l][k] / static_cast<double>(s.beats)));
        }
      }
      w.st_record_means = s.st_record_means;
      out.groups.push_back(std::move(w));
    }
    return out;
  }

 private:
  struct State {
    std::size_t records = 0, beats = 0;
    std::array<std::array<double, kBeatSamples>, kNumLeads> mean{}, m2{};
    std::array<std::vector<double>, kNumLeads> st_record_means;
  };
  std::array<State, 2> state_;
};

inline WaveformSummary group_waveforms(std::span<const BeatMatrix> beats, std::span<const RiskGroup> groups) {
  if (beats.size() != groups.size()) fail(ErrorKind::shape, "group_waveforms: one risk group per record required");
  WaveformAccumulator acc;
  for (std::size_t i = 0; i < beats.size(); ++i) acc.add(beats[i], groups[i]);
  return acc.summary();
}

struct StSeparation {
  std::size_t lead = 0;
  double high_mean = 0.0;
  double low_mean = 0.0;
  double diff = 0.0;
  double se = 0.0;
  double ratio = 0.0;  // |diff| / se
};

// High-minus-low difference of ST-window level per lead. The standard error
// treats records (not beats) as the independent units:
// se = sqrt(s_high^2 / n_high + s_low^2 / n_low).
inline std::vector<StSeparation> st_separation(const WaveformSummary& summary) {
  const GroupWaveform* hi = summary.find(RiskGroup::high);
  const GroupWaveform* lo = summary.find(RiskGroup::low);
  if (!hi || !lo) fail(ErrorKind::undefined_metric, "ST separation needs both risk groups");
  if (hi->records < 2 || lo->records < 2) fail(ErrorKind::undefined_metric, "ST separation needs >= 2 records per group");
  auto moments = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair{m, s2 / static_cast<double>(v.size() - 1)};
  };
  std::vector<StSeparation> out;
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    const auto [mh, vh] = moments(hi->st_record_means[l]);
    const auto [ml, vl] = moments(lo->st_record_means[l]);
    StSeparation s;
    s.lead = l;
    s.high_mean = mh;
    s.low_mean = ml;
    s.diff = mh - ml;
    s.se = std::sqrt(vh / static_cast<double>(hi->records) + vl / static_cast<double>(lo->records));
    s.ratio = s.se > 0.0 ? std::abs(s.diff) / s.se : (s.diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    out.push_back(s);
  }
  return out;
}

}  // namespace stenograph
