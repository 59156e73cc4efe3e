#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "stenograph/cohort.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

struct AugConfig {
  double max_shift_fraction = 0.10;
  double scale_half_range = 0.10;
  double noise_base_std = 0.05;  // fraction of each lead's std
  double occlusion_min = 0.02;
  double occlusion_max = 0.10;
  // Remaps the schedule to alpha_floor + (1 - alpha_floor) * alpha.
  double alpha_floor = 0.0;
  bool shift = true;
  bool scale = true;
  bool noise = true;
  bool occlude = true;

  void validate() const {
    for (double f : {max_shift_fraction, scale_half_range, noise_base_std, occlusion_min,
                     occlusion_max, alpha_floor}) {
      if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::config, "augmentation fractions must be in [0, 1]");
    }
    if (occlusion_min > occlusion_max) fail(ErrorKind::config, "occlusion_min exceeds occlusion_max");
  }
};

// Cosine-annealed augmentation intensity: 0.5 + 0.5 cos(pi e / E).
inline double intensity(int epoch, int total_epochs) {
  if (total_epochs <= 0) fail(ErrorKind::config, "intensity: total epochs must be >= 1");
  if (epoch < 0 || epoch > total_epochs) {
    fail(ErrorKind::config, "intensity: epoch " + std::to_string(epoch) + " outside [0, " +
                                std::to_string(total_epochs) + "]");
  }
  if (epoch == 0) return 1.0;
  return 0.5 + 0.5 * std::cos(std::numbers::pi * epoch / total_epochs);
}

inline double scheduled_intensity(int epoch, int total_epochs, double alpha_floor) {
  const double a = intensity(epoch, total_epochs);
  return alpha_floor == 0.0 ? a : alpha_floor + (1.0 - alpha_floor) * a;
}

// Circular roll: out[i] = in[(i - shift) mod n].
inline void roll(std::span<double> x, std::int64_t shift) {
  const auto n = static_cast<std::int64_t>(x.size());
  if (n == 0) return;
  std::int64_t s = shift % n;
  if (s < 0) s += n;
  if (s == 0) return;
  std::rotate(x.begin(), x.begin() + (n - s), x.end());
}

// Same roll on all leads. Returns the applied shift.
inline std::int64_t temporal_shift(Signal& signal, double alpha, Rng& rng, const AugConfig& cfg = {}) {
  if (alpha == 0.0 || signal.n_samples == 0) return 0;
  const auto max_shift = static_cast<std::int64_t>(
      std::llround(cfg.max_shift_fraction * alpha * static_cast<double>(signal.n_samples)));
  const std::int64_t s = uniform_int(rng, -max_shift, max_shift);
  for (std::size_t l = 0; l < kNumLeads; ++l) roll(signal.lead(l), s);
  return s;
}

// One factor c ~ U[1 - h*alpha, 1 + h*alpha] for all leads. Returns c.
inline double amplitude_scale(Signal& signal, double alpha, Rng& rng, const AugConfig& cfg = {}) {
  if (alpha == 0.0) return 1.0;
  const double h = cfg.scale_half_range * alpha;
  const double c = uniform(rng, 1.0 - h, 1.0 + h);
  for (double& v : signal.data) v *= c;
  return c;
}

// Adds N(0, (base * alpha * lead_std)^2) per sample.
inline void gaussian_noise(Signal& signal, double alpha, Rng& rng, const AugConfig& cfg = {}) {
  if (alpha == 0.0 || signal.n_samples == 0) return;
  const double n = static_cast<double>(signal.n_samples);
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    auto x = signal.lead(l);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = cfg.noise_base_std * alpha * std::sqrt(var / n);
    if (sd == 0.0) continue;
    std::normal_distribution<double> noise(0.0, sd);
    for (double& v : x) v += noise(rng);
  }
}

struct OcclusionWindow {
  std::size_t start = 0;
  std::size_t length = 0;
};

// Zeroes one contiguous window of round(f * alpha * N) samples in all leads,
// f ~ U[occlusion_min, occlusion_max], start uniform.
inline OcclusionWindow occlude(Signal& signal, double alpha, Rng& rng, const AugConfig& cfg = {}) {
  if (alpha == 0.0) return {};
  const std::size_t n = signal.n_samples;
  if (n < 50) fail(ErrorKind::data, "occlude: signal shorter than 50 samples");
  const double f = cfg.occlusion_min == cfg.occlusion_max ? cfg.occlusion_min
                                                          : uniform(rng, cfg.occlusion_min, cfg.occlusion_max);
  OcclusionWindow w;
  w.length = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(f * alpha * static_cast<double>(n))));
  w.start = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n - w.length)));
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    auto x = signal.lead(l);
    std::fill(x.begin() + static_cast<std::ptrdiff_t>(w.start),
              x.begin() + static_cast<std::ptrdiff_t>(w.start + w.length), 0.0);
  }
  return w;
}

// shift -> scale -> noise -> occlusion, all at the epoch's intensity.
inline Signal augment(Signal signal, int epoch, int total_epochs, const AugConfig& cfg, Rng& rng) {
  const double alpha = scheduled_intensity(epoch, total_epochs, cfg.alpha_floor);
  if (cfg.shift) temporal_shift(signal, alpha, rng, cfg);
  if (cfg.scale) amplitude_scale(signal, alpha, rng, cfg);
  if (cfg.noise) gaussian_noise(signal, alpha, rng, cfg);
  if (cfg.occlude) occlude(signal, alpha, rng, cfg);
  return signal;
}

inline EcgRecord augment(EcgRecord record, int epoch, int total_epochs, const AugConfig& cfg, Rng& rng) {
  record.signal = augment(std::move(record.signal), epoch, total_epochs, cfg, rng);
  return record;
}

}  // namespace stenograph
