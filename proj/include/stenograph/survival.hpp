#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "stenograph/cohort.hpp"
#include "stenograph/common.hpp"

namespace stenograph {

enum class RiskGroup : std::uint8_t { low, high };

inline std::string_view risk_group_name(RiskGroup g) { return g == RiskGroup::high ? "high" : "low"; }

// High-risk cutoffs on predicted probability, inclusive.
struct RiskThresholds {
  std::array<double, kNumVessels> cutoff = {0.15, 0.01, 0.15, 0.15};  // RCA, LM, LAD, LCX

  double operator[](Vessel v) const { return cutoff[index_of(v)]; }

  void validate() const {
    for (double c : cutoff) {
      if (!(c > 0.0 && c < 1.0)) fail(ErrorKind::config, "risk cutoffs must lie in (0, 1)");
    }
    for (Vessel v : {Vessel::RCA, Vessel::LAD, Vessel::LCX}) {
      if (!(cutoff[index_of(Vessel::LM)] < cutoff[index_of(v)])) {
        fail(ErrorKind::config, "LM cutoff must be below the other vessel cutoffs");
      }
    }
  }
};

inline RiskGroup stratify(double prob, Vessel v, const RiskThresholds& thresholds = {}) {
  if (!(prob >= 0.0 && prob <= 1.0)) fail(ErrorKind::data, "probability " + std::to_string(prob) + " outside [0, 1]");
  return prob >= thresholds[v] ? RiskGroup::high : RiskGroup::low;
}

struct SurvivalPoint {
  int day = 0;
  double incidence = 0.0;
  std::size_t at_risk = 0;  // at risk just before this day
  std::size_t events = 0;
  std::size_t censored = 0;
};

// Step function: incidence holds from each point's day until the next.
struct SurvivalCurve {
  std::string group;
  std::vector<SurvivalPoint> points;

  double incidence_at(int day) const {
    double v = 0.0;
    for (const auto& p : points) {
      if (p.day > day) break;
      v = p.incidence;
    }
    return v;
  }
};

// 1 - Kaplan-Meier survival. At a shared day, events are counted before
// censorings, so subjects censored that day are still at risk.
//
// Between censorings the product-limit telescopes, so the estimate is kept as
// F = F0 + S0 * (events since last censoring) / (at risk at last censoring),
// which reproduces the empirical CDF exactly when nothing is censored.
inline SurvivalCurve cumulative_incidence(std::span<const FollowUp> group, int horizon_days = 365,
                                          std::string label = {}) {
  if (group.empty()) fail(ErrorKind::data, "cumulative_incidence: empty group");
  std::map<int, std::pair<std::size_t, std::size_t>> by_day;  // day -> (events, censored)
  for (const auto& f : group) {
    if (f.days < 0 || f.days > horizon_days) {
      fail(ErrorKind::data, "follow-up day " + std::to_string(f.days) + " outside [0, " + std::to_string(horizon_days) + "]");
    }
    auto& slot = by_day[f.days];
    (f.event ? slot.first : slot.second) += 1;
  }
  SurvivalCurve curve;
  curve.group = std::move(label);
  std::size_t at_risk = group.size();
  curve.points.push_back({0, 0.0, at_risk, 0, 0});
  double f0 = 0.0, s0 = 1.0;
  std::size_t seg_start = at_risk, seg_events = 0;
  for (const auto& [day, counts] : by_day) {
    const auto [d, c] = counts;
    seg_events += d;
    const double f = std::min(1.0, f0 + s0 * (static_cast<double>(seg_events) / static_cast<double>(seg_start)));
    SurvivalPoint p{day, f, at_risk, d, c};
    if (day == 0 && !curve.points.empty() && curve.points.back().day == 0) {
      curve.points.back() = p;
    } else {
      curve.points.push_back(p);
    }
    at_risk -= d + c;
    if (c > 0) {
      f0 = f;
      s0 = s0 * (static_cast<double>(seg_start - seg_events) / static_cast<double>(seg_start));
      seg_start = at_risk;
      seg_events = 0;
      if (seg_start == 0) break;
    }
  }
  return curve;
}

struct LogRankResult {
  double chi_square = 0.0;
  double p = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
};

// Two-group log-rank test with hypergeometric variance, chi-square(1) tail.
inline LogRankResult logrank(std::span<const FollowUp> a, std::span<const FollowUp> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::undefined_metric, "log-rank needs two non-empty groups");
  struct Tally {
    std::size_t events = 0, removed = 0;
  };
  std::map<int, std::array<Tally, 2>> by_day;
  for (int g = 0; g < 2; ++g) {
    for (const auto& f : g == 0 ? a : b) {
      auto& t = by_day[f.days][static_cast<std::size_t>(g)];
      t.events += f.event ? 1 : 0;
      ++t.removed;
    }
  }
  double n_a = static_cast<double>(a.size()), n_b = static_cast<double>(b.size());
  double o = 0.0, e = 0.0, var = 0.0, total_events = 0.0;
  for (const auto& [day, t] : by_day) {
    const double d_a = static_cast<double>(t[0].events), d_b = static_cast<double>(t[1].events);
    const double d = d_a + d_b, n = n_a + n_b;
    if (d > 0.0) {
      total_events += d;
      o += d_a;
      e += d * n_a / n;
      if (n > 1.0) var += d * (n_a / n) * (n_b / n) * (n - d) / (n - 1.0);
    }
    n_a -= static_cast<double>(t[0].removed);
    n_b -= static_cast<double>(t[1].removed);
  }
  if (total_events == 0.0) fail(ErrorKind::undefined_metric, "log-rank undefined: no events in either group");
  LogRankResult out;
  out.observed_a = o;
  out.expected_a = e;
  const double diff = o - e;
  if (var <= 0.0) {
    if (diff != 0.0) fail(ErrorKind::undefined_metric, "log-rank undefined: zero variance");
    return out;
  }
  out.chi_square = diff * diff / var;
  boost::math::chi_squared dist(1.0);
  out.p = boost::math::cdf(boost::math::complement(dist, out.chi_square));
  return out;
}

struct VesselRisk {
  Vessel vessel{};
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  bool defined = false;
  std::string note;
  std::optional<SurvivalCurve> high;
  std::optional<SurvivalCurve> low;
  std::optional<LogRankResult> test;
};

struct RiskReport {
  RiskThresholds thresholds;
  std::vector<std::array<RiskGroup, kNumVessels>> groups;  // per record
  std::vector<VesselRisk> vessels;
};

// probs row-major [n x 4]; follow-up per record.
inline RiskReport risk_report(std::span<const double> probs, std::span<const FollowUp> follow_up,
                              const RiskThresholds& thresholds = {}, int horizon_days = 365) {
  thresholds.validate();
  const std::size_t n = follow_up.size();
  if (probs.size() != n * kNumVessels) {
    fail(ErrorKind::shape, "risk_report: " + std::to_string(probs.size()) + " probabilities for " +
                               std::to_string(n) + " records");
  }
  RiskReport out;
  out.thresholds = thresholds;
  out.groups.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (Vessel v : kVessels) out.groups[i][index_of(v)] = stratify(probs[i * kNumVessels + index_of(v)], v, thresholds);
  }
  for (Vessel v : kVessels) {
    VesselRisk vr;
    vr.vessel = v;
    std::vector<FollowUp> hi, lo;
    for (std::size_t i = 0; i < n; ++i) (out.groups[i][index_of(v)] == RiskGroup::high ? hi : lo).push_back(follow_up[i]);
    vr.n_high = hi.size();
    vr.n_low = lo.size();
    if (hi.empty() || lo.empty()) {
      vr.note = hi.empty() ? "empty high-risk group" : "empty low-risk group";
    } else {
      vr.high = cumulative_incidence(hi, horizon_days, "high");
      vr.low = cumulative_incidence(lo, horizon_days, "low");
      try {
        vr.test = logrank(hi, lo);
        vr.defined = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_metric) throw;
        vr.note = e.what();
      }
    }
    out.vessels.push_back(std::move(vr));
  }
  return out;
}

}  // namespace stenograph
