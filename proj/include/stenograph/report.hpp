#pragma once

// CSV and SVG exports for evaluation, risk and waveform results.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "stenograph/evaluate.hpp"
#include "stenograph/explain.hpp"
#include "stenograph/survival.hpp"
#include "stenograph/svg.hpp"

namespace stenograph {

// Round-trippable and locale-independent.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string roc_points_csv(const EvalReport& r) {
  std::string s = "group,vessel,threshold,fpr,tpr\n";
  for (const auto& g : r.groups) {
    for (const auto& v : g.vessels) {
      for (const auto& p : v.roc) {
        s += g.name + "," + std::string(vessel_name(v.vessel)) + "," + fmt(p.threshold) + "," + fmt(p.fpr) + "," +
             fmt(p.tpr) + "\n";
      }
    }
  }
  return s;
}

inline std::string calibration_bins_csv(const EvalReport& r) {
  std::string s = "group,vessel,lower,upper,count,mean_predicted,observed\n";
  for (const auto& g : r.groups) {
    for (const auto& v : g.vessels) {
      if (!v.calibration) continue;
      for (const auto& b : v.calibration->bins) {
        s += g.name + "," + std::string(vessel_name(v.vessel)) + "," + fmt(b.lower) + "," + fmt(b.upper) + "," +
             std::to_string(b.count) + "," + (b.count ? fmt(b.mean_predicted) : "") + "," +
             (b.count ? fmt(b.observed) : "") + "\n";
      }
    }
  }
  return s;
}

inline std::string grade_boxes_csv(const EvalReport& r) {
  std::string s = "group,vessel,grade,n,q1,median,q3,whisker_lo,whisker_hi,outliers\n";
  for (const auto& g : r.groups) {
    for (const auto& v : g.vessels) {
      for (std::size_t k = 0; k < v.grades.size(); ++k) {
        const auto& b = v.grades[k];
        s += g.name + "," + std::string(vessel_name(v.vessel)) + "," + std::to_string(k) + "," + std::to_string(b.n);
        if (b.n == 0) {
          s += ",,,,,,0\n";
          continue;
        }
        s += "," + fmt(b.q1) + "," + fmt(b.median) + "," + fmt(b.q3) + "," + fmt(b.whisker_lo) + "," +
             fmt(b.whisker_hi) + "," + std::to_string(b.outliers) + "\n";
      }
    }
  }
  return s;
}

namespace detail {

// 2 x 2 grid of square panels, one per vessel.
struct VesselGrid {
  static constexpr double kPanel = 220, kGapX = 90, kGapY = 80, kLeft = 60, kTop = 50;
  static double width() { return kLeft + 2 * kPanel + kGapX; }
  static double height() { return kTop + 2 * kPanel + kGapY + 40; }
  static double left(std::size_t i) { return kLeft + static_cast<double>(i % 2) * (kPanel + kGapX); }
  static double top(std::size_t i) { return kTop + static_cast<double>(i / 2) * (kPanel + kGapY); }
};

inline std::string title_for(const VesselEval& v, std::string_view what) {
  return std::string(vessel_name(v.vessel)) + " " + std::string(what);
}

}  // namespace detail

inline std::string roc_svg(const GroupEval& g) {
  using detail::VesselGrid;
  svg::Document doc(VesselGrid::width(), VesselGrid::height());
  doc.text(VesselGrid::width() / 2, 20, "ROC curves (" + g.name + ", n=" + std::to_string(g.n) + ")", 14, "middle");
  for (std::size_t i = 0; i < g.vessels.size(); ++i) {
    const auto& v = g.vessels[i];
    svg::Panel p(doc, VesselGrid::left(i), VesselGrid::top(i), VesselGrid::kPanel, VesselGrid::kPanel, 0, 1, 0, 1);
    p.frame(detail::title_for(v, "ROC"), "1 - specificity", "sensitivity");
    p.diagonal();
    if (!v.auc) {
      doc.text(p.px(0.5), p.py(0.5), "AUC undefined", 11, "middle", "#888");
      continue;
    }
    std::vector<double> xs, ys;
    for (const auto& pt : v.roc) {
      xs.push_back(pt.fpr);
      ys.push_back(pt.tpr);
    }
    p.series(xs, ys, svg::kPalette[i]);
    char label[64];
    std::snprintf(label, sizeof label, "AUC %.3f (%.3f-%.3f)", *v.auc, v.ci->lo, v.ci->hi);
    doc.text(p.px(0.95), p.py(0.05), label, 10, "end");
  }
  return doc.str();
}

inline std::string calibration_svg(const GroupEval& g) {
  using detail::VesselGrid;
  svg::Document doc(VesselGrid::width(), VesselGrid::height());
  doc.text(VesselGrid::width() / 2, 20, "Calibration (" + g.name + ")", 14, "middle");
  for (std::size_t i = 0; i < g.vessels.size(); ++i) {
    const auto& v = g.vessels[i];
    svg::Panel p(doc, VesselGrid::left(i), VesselGrid::top(i), VesselGrid::kPanel, VesselGrid::kPanel, 0, 1, 0, 1);
    p.frame(detail::title_for(v, "calibration"), "mean predicted", "observed fraction");
    p.diagonal();
    if (!v.calibration) continue;
    std::vector<double> xs, ys;
    for (const auto& b : v.calibration->bins) {
      if (b.count == 0) continue;
      xs.push_back(b.mean_predicted);
      ys.push_back(b.observed);
      doc.circle(p.px(b.mean_predicted), p.py(b.observed), 3, svg::kPalette[i]);
    }
    p.series(xs, ys, svg::kPalette[i]);
    char label[48];
    std::snprintf(label, sizeof label, "Brier %.4f", v.calibration->brier);
    doc.text(p.px(0.95), p.py(0.05), label, 10, "end");
  }
  return doc.str();
}

inline std::string grade_boxes_svg(const GroupEval& g) {
  using detail::VesselGrid;
  svg::Document doc(VesselGrid::width(), VesselGrid::height());
  doc.text(VesselGrid::width() / 2, 20, "Predicted probability by stenosis grade (" + g.name + ")", 14, "middle");
  for (std::size_t i = 0; i < g.vessels.size(); ++i) {
    const auto& v = g.vessels[i];
    const double n_grades = static_cast<double>(v.grades.size());
    svg::Panel p(doc, VesselGrid::left(i), VesselGrid::top(i), VesselGrid::kPanel, VesselGrid::kPanel, -0.5,
                 n_grades - 0.5, 0, 1);
    p.frame(detail::title_for(v, "by grade"), "grade", "probability", static_cast<int>(v.grades.size()) - 1);
    for (std::size_t k = 0; k < v.grades.size(); ++k) {
      const auto& b = v.grades[k];
      if (b.n == 0) continue;
      const double x = static_cast<double>(k), half = 0.3;
      doc.line(p.px(x), p.py(b.whisker_lo), p.px(x), p.py(b.q1), "#444");
      doc.line(p.px(x), p.py(b.q3), p.px(x), p.py(b.whisker_hi), "#444");
      doc.rect(p.px(x - half), p.py(b.q3), p.px(x + half) - p.px(x - half), p.py(b.q1) - p.py(b.q3),
               svg::kPalette[i], "#444", 0.4);
      doc.line(p.px(x - half), p.py(b.median), p.px(x + half), p.py(b.median), "#000", 2);
    }
    if (v.spearman) {
      char label[64];
      std::snprintf(label, sizeof label, "rho %.3f, p %.2g", v.spearman->rho, v.spearman->p);
      doc.text(p.px(-0.4), p.py(0.93), label, 10, "start");
    }
  }
  return doc.str();
}

// Forest-style table: one row per group, AUC with CI per vessel.
inline std::string subgroups_svg(const EvalReport& r) {
  const double row = 26, label_w = 120, col_w = 170, top = 60;
  const double width = label_w + kNumVessels * col_w + 40;
  const double height = top + row * static_cast<double>(r.groups.size()) + 50;
  svg::Document doc(width, height);
  doc.text(width / 2, 20, "AUC by subgroup", 14, "middle");
  for (std::size_t c = 0; c < kNumVessels; ++c) {
    const double x0 = label_w + static_cast<double>(c) * col_w;
    doc.text(x0 + col_w / 2, top - 20, vessel_name(kVessels[c]), 12, "middle");
    svg::Panel p(doc, x0 + 10, top - 8, col_w - 20, row * static_cast<double>(r.groups.size()), 0.4, 1.0, 0, 1);
    doc.rect(x0 + 10, top - 8, col_w - 20, row * static_cast<double>(r.groups.size()), "none", "#ccc");
    doc.line(p.px(0.5), top - 8, p.px(0.5), top - 8 + row * static_cast<double>(r.groups.size()), "#999", 1, "3,3");
    for (double t : {0.4, 0.6, 0.8, 1.0}) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%.1f", t);
      doc.text(p.px(t), top - 8 + row * static_cast<double>(r.groups.size()) + 14, buf, 9, "middle");
    }
    for (std::size_t gi = 0; gi < r.groups.size(); ++gi) {
      const auto& v = r.groups[gi].vessels[c];
      const double y = top + row * static_cast<double>(gi) + row / 2 - 8;
      if (!v.auc) {
        doc.text(x0 + col_w / 2, y + 4, "undefined", 9, "middle", "#888");
        continue;
      }
      auto clamp = [](double a) { return std::clamp(a, 0.4, 1.0); };
      doc.line(p.px(clamp(v.ci->lo)), y, p.px(clamp(v.ci->hi)), y, svg::kPalette[c], 1.5);
      doc.rect(p.px(clamp(*v.auc)) - 3, y - 3, 6, 6, svg::kPalette[c]);
    }
  }
  for (std::size_t gi = 0; gi < r.groups.size(); ++gi) {
    const double y = top + row * static_cast<double>(gi) + row / 2 - 4;
    doc.text(10, y, r.groups[gi].name + " (n=" + std::to_string(r.groups[gi].n) + ")", 10);
  }
  return doc.str();
}

inline std::string risk_groups_csv(const RiskReport& r, const Cohort& cohort, std::span<const double> probs) {
  std::string s = "ecg_id,patient_id";
  for (Vessel v : kVessels) s += ",prob_" + std::string(vessel_name(v));
  for (Vessel v : kVessels) s += ",group_" + std::string(vessel_name(v));
  s += "\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    s += cohort.records[i].ecg.ecg_id + "," + cohort.records[i].ecg.patient_id;
    for (std::size_t t = 0; t < kNumVessels; ++t) s += "," + fmt(probs[i * kNumVessels + t]);
    for (std::size_t t = 0; t < kNumVessels; ++t) s += "," + std::string(risk_group_name(r.groups[i][t]));
    s += "\n";
  }
  return s;
}

inline std::string incidence_csv(const RiskReport& r) {
  std::string s = "vessel,group,day,incidence,at_risk,events,censored\n";
  for (const auto& v : r.vessels) {
    for (const auto* c : {&v.high, &v.low}) {
      if (!*c) continue;
      for (const auto& p : (*c)->points) {
        s += std::string(vessel_name(v.vessel)) + "," + (*c)->group + "," + std::to_string(p.day) + "," +
             fmt(p.incidence) + "," + std::to_string(p.at_risk) + "," + std::to_string(p.events) + "," +
             std::to_string(p.censored) + "\n";
      }
    }
  }
  return s;
}

inline nlohmann::json logrank_json(const RiskReport& r) {
  nlohmann::json vessels = nlohmann::json::array();
  for (const auto& v : r.vessels) {
    nlohmann::json j = {{"vessel", vessel_name(v.vessel)},
                        {"threshold", r.thresholds[v.vessel]},
                        {"n_high", v.n_high},
                        {"n_low", v.n_low},
                        {"defined", v.defined}};
    if (v.test) {
      j["chi_square"] = v.test->chi_square;
      j["p"] = v.test->p;
      j["observed_high"] = v.test->observed_a;
      j["expected_high"] = v.test->expected_a;
    }
    if (v.high) j["incidence_365_high"] = v.high->incidence_at(365);
    if (v.low) j["incidence_365_low"] = v.low->incidence_at(365);
    if (!v.note.empty()) j["note"] = v.note;
    vessels.push_back(j);
  }
  return {{"test", "log-rank, chi-square 1 df"}, {"vessels", vessels}};
}

inline std::string incidence_svg(const RiskReport& r, int horizon_days = 365) {
  using detail::VesselGrid;
  double y_max = 0.05;
  for (const auto& v : r.vessels) {
    for (const auto* c : {&v.high, &v.low}) {
      if (*c && !(*c)->points.empty()) y_max = std::max(y_max, (*c)->points.back().incidence);
    }
  }
  y_max = std::min(1.0, std::ceil(y_max * 10.0 + 0.5) / 10.0);
  svg::Document doc(VesselGrid::width(), VesselGrid::height());
  doc.text(VesselGrid::width() / 2, 20, "Cumulative incidence by predicted risk", 14, "middle");
  for (std::size_t i = 0; i < r.vessels.size(); ++i) {
    const auto& v = r.vessels[i];
    svg::Panel p(doc, VesselGrid::left(i), VesselGrid::top(i), VesselGrid::kPanel, VesselGrid::kPanel, 0,
                 horizon_days, 0, y_max);
    p.frame(std::string(vessel_name(v.vessel)) + " risk groups", "days", "cumulative incidence");
    if (!v.defined && !v.high) {
      doc.text(p.px(horizon_days / 2.0), p.py(y_max / 2), v.note, 10, "middle", "#888");
      continue;
    }
    const std::pair<const std::optional<SurvivalCurve>*, std::string_view> curves[] = {{&v.high, "#d62728"},
                                                                                       {&v.low, "#1f77b4"}};
    double legend_y = 0.92;
    for (const auto& [c, color] : curves) {
      if (!*c) continue;
      std::vector<double> xs, ys;
      for (const auto& pt : (*c)->points) {
        xs.push_back(pt.day);
        ys.push_back(pt.incidence);
      }
      p.steps(xs, ys, horizon_days, color);
      const std::size_t n = (*c)->points.front().at_risk;
      doc.text(p.px(horizon_days * 0.04), p.py(y_max * legend_y), (*c)->group + " (n=" + std::to_string(n) + ")",
               10, "start", color);
      legend_y -= 0.08;
    }
    if (v.test) {
      char label[48];
      std::snprintf(label, sizeof label, "log-rank p = %.2g", v.test->p);
      doc.text(p.px(horizon_days * 0.04), p.py(y_max * legend_y), label, 10);
    }
  }
  return doc.str();
}

// Rows = groups x leads x 256 samples.
inline std::string waveforms_csv(const WaveformSummary& s) {
  std::string out = "group,lead,sample,time_s,mean,std\n";
  for (const auto& g : s.groups) {
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      for (std::size_t k = 0; k < kBeatSamples; ++k) {
        out += std::string(risk_group_name(g.group)) + "," + std::string(kLeadNames[l]) + "," + std::to_string(k) +
               "," + fmt(beat_time(k)) + "," + fmt(g.mean[l][k]) + "," + fmt(g.std[l][k]) + "\n";
      }
    }
  }
  return out;
}

// 12 panels (3 rows x 4 columns) in fixed lead order; mean +- 1 std per group.
inline std::string waveforms_svg(const WaveformSummary& s, Vessel vessel) {
  const double pw = 200, ph = 130, gx = 40, gy = 50, left = 50, top = 60;
  const double width = left + 4 * pw + 3 * gx + 20, height = top + 3 * ph + 2 * gy + 50;
  svg::Document doc(width, height);
  doc.text(width / 2, 22, std::string(vessel_name(vessel)) + " risk groups: average beat per lead (z-scored)", 14,
           "middle");
  double lo = -1.0, hi = 1.0;
  for (const auto& g : s.groups) {
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      for (std::size_t k = 0; k < kBeatSamples; ++k) {
        lo = std::min(lo, g.mean[l][k] - g.std[l][k]);
        hi = std::max(hi, g.mean[l][k] + g.std[l][k]);
      }
    }
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  std::vector<double> t(kBeatSamples);
  for (std::size_t k = 0; k < kBeatSamples; ++k) t[k] = beat_time(k);
  const auto st = st_window_samples();
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    const double x0 = left + static_cast<double>(l % 4) * (pw + gx);
    const double y0 = top + static_cast<double>(l / 4) * (ph + gy);
    svg::Panel p(doc, x0, y0, pw, ph, t.front(), t.back(), lo, hi);
    doc.rect(p.px(t[st.first]), y0, p.px(t[st.last]) - p.px(t[st.first]), ph, "#f2e394", "none", 0.5);
    p.frame(kLeadNames[l], l / 4 == 2 ? "s from R" : "", "", 4);
    for (const auto& g : s.groups) {
      const std::string_view color = g.group == RiskGroup::high ? "#d62728" : "#1f77b4";
      std::vector<double> m(kBeatSamples), a(kBeatSamples), b(kBeatSamples);
      for (std::size_t k = 0; k < kBeatSamples; ++k) {
        m[k] = g.mean[l][k];
        a[k] = m[k] - g.std[l][k];
        b[k] = m[k] + g.std[l][k];
      }
      p.band(t, a, b, color, 0.15);
      p.series(t, m, color, 1.2);
    }
  }
  double lx = left;
  for (const auto& g : s.groups) {
    const std::string_view color = g.group == RiskGroup::high ? "#d62728" : "#1f77b4";
    doc.text(lx, height - 15,
             std::string(risk_group_name(g.group)) + " risk: " + std::to_string(g.records) + " records, " +
                 std::to_string(g.beats) + " beats",
             11, "start", color);
    lx += 280;
  }
  return doc.str();
}

}  // namespace stenograph
