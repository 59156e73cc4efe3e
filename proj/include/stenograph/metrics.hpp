#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "stenograph/common.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

// Mid-ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline void check_lengths(std::size_t a, std::size_t b, std::string_view what) {
  if (a != b) {
    fail(ErrorKind::shape, std::string(what) + ": " + std::to_string(a) + " scores vs " + std::to_string(b) + " labels");
  }
}

// Mann-Whitney AUC by rank summation: P(pos > neg) + 0.5 P(tie).
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorKind::undefined_metric, "undefined AUC: labels contain a single class (" + std::to_string(n_pos) +
                                          " positives, " + std::to_string(n_neg) + " negatives)");
  }
  const auto ranks = mid_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i]) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

// Points from (0,0) to (1,1), one per distinct score, descending threshold.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size(), "roc_curve");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::undefined_metric, "undefined ROC: labels contain a single class");
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? tp : fp) += 1;
    out.push_back({s, fp / n_neg, tp / n_pos});
  }
  return out;
}

// Linear-interpolation quantile of sorted data (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::undefined_metric, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Piecewise-linear quantile at plotting positions (i - 0.5) / n (R type 5).
// Quartiles of (1, 2, 3, 4) are 1.5, 2.5, 3.5.
inline double hazen_quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::undefined_metric, "quantile of empty sample");
  const double n = static_cast<double>(sorted.size());
  const double h = std::clamp(n * q - 0.5, 0.0, n - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile interval over stratified bootstrap replicates: positives and
// negatives are resampled separately, so every replicate keeps both classes.
//
// Each replicate's AUC is counted against prefix sums of the resampled
// negative multiplicities (negatives pre-sorted once), which gives the same
// exact half-integer pair count as rank summation in O(n) per replicate.
inline Interval auc_ci(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t n_boot,
                       std::uint64_t seed, double level = 0.95, std::size_t threads = 1) {
  auc(scores, labels);
  if (n_boot < 2) fail(ErrorKind::config, "auc_ci: need at least 2 bootstrap replicates");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
  std::vector<std::size_t> neg_order(neg.size());
  std::iota(neg_order.begin(), neg_order.end(), 0);
  std::sort(neg_order.begin(), neg_order.end(), [&](std::size_t a, std::size_t b) { return neg[a] < neg[b]; });
  std::vector<std::size_t> rank_of(neg.size());
  std::vector<double> sorted(neg.size());
  for (std::size_t r = 0; r < neg.size(); ++r) {
    rank_of[neg_order[r]] = r;
    sorted[r] = neg[neg_order[r]];
  }
  // Negatives strictly below / not above each positive.
  std::vector<std::size_t> below(pos.size()), upto(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    below[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), pos[i]) - sorted.begin());
    upto[i] = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), pos[i]) - sorted.begin());
  }
  const auto np = static_cast<std::int64_t>(pos.size()), nn = static_cast<std::int64_t>(neg.size());
  std::vector<double> reps(n_boot);
  parallel_for(n_boot, threads, [&](std::size_t b) {
    Rng rng = make_rng(seed, {hash_tag("auc_ci"), b});
    std::vector<std::size_t> pos_draw(pos.size());
    for (auto& d : pos_draw) d = static_cast<std::size_t>(uniform_int(rng, 0, np - 1));
    std::vector<double> prefix(neg.size() + 1, 0.0);
    for (std::int64_t i = 0; i < nn; ++i) prefix[rank_of[static_cast<std::size_t>(uniform_int(rng, 0, nn - 1))] + 1] += 1.0;
    for (std::size_t r = 0; r < neg.size(); ++r) prefix[r + 1] += prefix[r];
    double pairs = 0.0;
    for (std::size_t d : pos_draw) pairs += prefix[below[d]] + 0.5 * (prefix[upto[d]] - prefix[below[d]]);
    reps[b] = pairs / (static_cast<double>(np) * static_cast<double>(nn));
  });
  std::sort(reps.begin(), reps.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(reps, tail), quantile_sorted(reps, 1.0 - tail)};
}

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::data, "probability " + std::to_string(p) + " outside [0, 1]");
}

inline double brier(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  check_lengths(probs.size(), labels.size(), "brier");
  if (probs.empty()) fail(ErrorKind::undefined_metric, "brier of empty sample");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    check_probability(probs[i]);
    const double d = probs[i] - (labels[i] ? 1.0 : 0.0);
    acc += d * d;
  }
  return acc / static_cast<double>(probs.size());
}

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_predicted = 0.0;
  double observed = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationBin> bins;
  double brier = 0.0;
};

// Equal-width bins over [0, 1]; p = 1 falls in the last bin.
inline CalibrationResult calibration(std::span<const double> probs, std::span<const std::uint8_t> labels,
                                     std::size_t n_bins = 10) {
  if (n_bins == 0) fail(ErrorKind::config, "calibration needs at least one bin");
  CalibrationResult out;
  out.brier = brier(probs, labels);
  out.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.bins[b].lower = static_cast<double>(b) / static_cast<double>(n_bins);
    out.bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto b = std::min(n_bins - 1, static_cast<std::size_t>(probs[i] * static_cast<double>(n_bins)));
    auto& bin = out.bins[b];
    ++bin.count;
    bin.mean_predicted += probs[i];
    bin.observed += labels[i] ? 1.0 : 0.0;
  }
  for (auto& bin : out.bins) {
    if (bin.count == 0) continue;
    bin.mean_predicted /= static_cast<double>(bin.count);
    bin.observed /= static_cast<double>(bin.count);
  }
  return out;
}

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  bool ties = false;
  std::string p_method;
};

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::undefined_metric, "undefined correlation: an input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman rho (Pearson on mid-ranks) with a two-sided p-value: t
// approximation for n > 10, exact permutation for n <= 7, seeded Monte Carlo
// permutation (10k) otherwise.
inline SpearmanResult spearman(std::span<const double> grades, std::span<const double> probs, std::uint64_t seed = 0) {
  check_lengths(grades.size(), probs.size(), "spearman");
  const std::size_t n = grades.size();
  if (n < 3) fail(ErrorKind::undefined_metric, "spearman needs n >= 3, got " + std::to_string(n));
  const auto rx = mid_ranks(grades);
  const auto ry = mid_ranks(probs);
  SpearmanResult out;
  out.n = n;
  out.rho = pearson(rx, ry);
  auto has_ties = [](std::vector<double> r) {
    std::sort(r.begin(), r.end());
    return std::adjacent_find(r.begin(), r.end()) != r.end();
  };
  out.ties = has_ties(rx) || has_ties(ry);

  const double obs = std::abs(out.rho) - 1e-12;
  if (n > 10) {
    out.p_method = "t";
    const double r2 = out.rho * out.rho;
    if (r2 >= 1.0) {
      out.p = 0.0;
    } else {
      const double t = out.rho * std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
      boost::math::students_t dist(static_cast<double>(n - 2));
      out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
  } else if (n <= 7) {
    out.p_method = "exact";
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      if (std::abs(pearson(rx, perm)) >= obs) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    // Multiset permutations; each distinct arrangement occurs equally often.
    out.p = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    out.p_method = "monte_carlo";
    constexpr std::size_t kPerms = 10000;
    Rng rng = make_rng(seed, {hash_tag("spearman")});
    std::vector<double> perm = ry;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < kPerms; ++i) {
      std::shuffle(perm.begin(), perm.end(), rng);
      if (std::abs(pearson(rx, perm)) >= obs) ++hits;
    }
    out.p = static_cast<double>(hits + 1) / static_cast<double>(kPerms + 1);
  }
  return out;
}

// Tukey box summary; quartiles by hazen_quantile_sorted.
struct BoxSummary {
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::size_t outliers = 0;
};

inline BoxSummary box_summary(std::vector<double> values) {
  BoxSummary out;
  out.n = values.size();
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  out.q1 = hazen_quantile_sorted(values, 0.25);
  out.median = hazen_quantile_sorted(values, 0.5);
  out.q3 = hazen_quantile_sorted(values, 0.75);
  const double iqr = out.q3 - out.q1;
  const double lo_fence = out.q1 - 1.5 * iqr, hi_fence = out.q3 + 1.5 * iqr;
  out.whisker_lo = *std::find_if(values.begin(), values.end(), [&](double v) { return v >= lo_fence; });
  out.whisker_hi = *std::find_if(values.rbegin(), values.rend(), [&](double v) { return v <= hi_fence; });
  for (double v : values) out.outliers += (v < lo_fence || v > hi_fence) ? 1 : 0;
  return out;
}

// Per-grade box summaries for one vessel; grades 0..n_grades-1, absent grades
// keep n = 0.
inline std::vector<BoxSummary> grade_probability_summary(std::span<const int> grades, std::span<const double> probs,
                                                         int n_grades = 4) {
  check_lengths(grades.size(), probs.size(), "grade_probability_summary");
  std::vector<std::vector<double>> by_grade(static_cast<std::size_t>(n_grades));
  for (std::size_t i = 0; i < grades.size(); ++i) {
    if (grades[i] < 0 || grades[i] >= n_grades) fail(ErrorKind::data, "grade " + std::to_string(grades[i]) + " out of range");
    by_grade[static_cast<std::size_t>(grades[i])].push_back(probs[i]);
  }
  std::vector<BoxSummary> out;
  for (auto& v : by_grade) out.push_back(box_summary(std::move(v)));
  return out;
}

struct MacroAuc {
  double value = 0.0;
  std::vector<double> per_vessel;  // NaN where undefined
  std::vector<Vessel> excluded;
};

// Mean of per-vessel AUCs over vessels with both classes present.
// probs and labels are row-major [n x 4].
inline MacroAuc macro_auc(std::span<const double> probs, std::span<const std::uint8_t> labels,
                          std::span<const Vessel> vessels = kVessels) {
  check_lengths(probs.size(), labels.size(), "macro_auc");
  const std::size_t n = probs.size() / kNumVessels;
  MacroAuc out;
  out.per_vessel.assign(kNumVessels, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t used = 0;
  for (Vessel v : vessels) {
    const std::size_t t = index_of(v);
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = probs[i * kNumVessels + t];
      l[i] = labels[i * kNumVessels + t];
      pos += l[i];
    }
    if (pos == 0 || pos == n) {
      out.excluded.push_back(v);
      continue;
    }
    out.per_vessel[t] = auc(s, l);
    sum += out.per_vessel[t];
    ++used;
  }
  if (used == 0) fail(ErrorKind::undefined_metric, "undefined Macro-AUC: no vessel has both classes");
  out.value = sum / static_cast<double>(used);
  return out;
}

}  // namespace stenograph
