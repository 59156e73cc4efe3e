#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stenograph/checkpoint.hpp"
#include "stenograph/cohort.hpp"
#include "stenograph/metrics.hpp"
#include "stenograph/trainer.hpp"

namespace stenograph {

struct EvalOptions {
  std::size_t n_boot = 2000;
  std::size_t bins = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::vector<Subgroup> subgroups;
};

struct VesselEval {
  Vessel vessel{};
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::optional<double> auc;
  std::optional<Interval> ci;
  std::vector<RocPoint> roc;
  std::optional<CalibrationResult> calibration;
  std::optional<SpearmanResult> spearman;
  std::vector<BoxSummary> grades;  // index = ordinal grade code
  std::vector<std::string> undefined;  // metric: reason
};

struct GroupEval {
  std::string name;
  std::size_t n = 0;
  std::vector<VesselEval> vessels;
};

struct EvalReport {
  std::size_t n_boot = 0;
  std::size_t bins = 0;
  std::uint64_t seed = 0;
  std::vector<GroupEval> groups;  // "all" first, then requested subgroups

  const GroupEval& group(std::string_view name) const {
    for (const auto& g : groups) {
      if (g.name == name) return g;
    }
    fail(ErrorKind::data, "report has no group '" + std::string(name) + "'");
  }
};

inline VesselEval evaluate_vessel(Vessel v, std::span<const double> probs, std::span<const std::uint8_t> labels,
                                  std::span<const int> grades, const EvalOptions& opt, std::uint64_t seed) {
  VesselEval out;
  out.vessel = v;
  out.n = probs.size();
  for (auto l : labels) out.n_pos += l;
  auto attempt = [&](std::string_view metric, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_metric) throw;
      out.undefined.push_back(std::string(metric) + ": " + e.what());
    }
  };
  attempt("auc", [&] {
    out.auc = auc(probs, labels);
    out.ci = auc_ci(probs, labels, opt.n_boot, derive_seed(seed, {hash_tag("ci")}), 0.95, opt.threads);
    out.roc = roc_curve(probs, labels);
  });
  attempt("calibration", [&] { out.calibration = calibration(probs, labels, opt.bins); });
  attempt("spearman", [&] {
    std::vector<double> g(grades.begin(), grades.end());
    out.spearman = spearman(g, probs, derive_seed(seed, {hash_tag("spearman")}));
  });
  out.grades = grade_probability_summary(grades, probs);
  return out;
}

// probs row-major [n x 4], aligned with cohort.records.
inline EvalReport evaluate_predictions(std::span<const double> probs, const Cohort& cohort, const EvalOptions& opt = {}) {
  if (cohort.empty()) fail(ErrorKind::data, "evaluate: empty cohort");
  if (probs.size() != cohort.size() * kNumVessels) {
    fail(ErrorKind::shape, "evaluate: " + std::to_string(probs.size()) + " probabilities for " +
                               std::to_string(cohort.size()) + " records");
  }
  EvalReport report;
  report.n_boot = opt.n_boot;
  report.bins = opt.bins;
  report.seed = opt.seed;

  auto run_group = [&](std::string name, const std::vector<std::size_t>& idx) {
    GroupEval g;
    g.name = std::move(name);
    g.n = idx.size();
    for (Vessel v : kVessels) {
      std::vector<double> p;
      std::vector<std::uint8_t> l;
      std::vector<int> grades;
      for (std::size_t i : idx) {
        p.push_back(probs[i * kNumVessels + index_of(v)]);
        l.push_back(cohort.records[i].labels.severe(v) ? 1 : 0);
        grades.push_back(grade_code(cohort.records[i].labels.grade(v)));
      }
      const std::uint64_t seed = derive_seed(opt.seed, {hash_tag(g.name), index_of(v)});
      g.vessels.push_back(evaluate_vessel(v, p, l, grades, opt, seed));
    }
    report.groups.push_back(std::move(g));
  };

  std::vector<std::size_t> all(cohort.size());
  std::iota(all.begin(), all.end(), 0);
  run_group("all", all);
  for (Subgroup s : opt.subgroups) run_group(std::string(subgroup_name(s)), subgroup_indices(cohort, s));
  return report;
}

inline Tensor predict_cohort(const ModelCheckpoint& ckpt, const ModelInputs& inputs, std::size_t threads = 1) {
  if (inputs.input_length() != ckpt.config.input_length) {
    fail(ErrorKind::shape, "checkpoint expects input length " + std::to_string(ckpt.config.input_length) +
                               ", data has " + std::to_string(inputs.input_length()));
  }
  std::vector<std::size_t> idx(inputs.size());
  std::iota(idx.begin(), idx.end(), 0);
  return ckpt.model().predict_proba(stack_inputs(inputs, idx), threads);
}

inline EvalReport evaluate(const ModelCheckpoint& ckpt, const Cohort& cohort, const EvalOptions& opt = {}) {
  if (cohort.empty()) fail(ErrorKind::data, "evaluate: empty cohort");
  const Tensor probs = predict_cohort(ckpt, prepare_inputs(cohort, opt.threads), opt.threads);
  return evaluate_predictions(probs.data(), cohort, opt);
}

// JSON has no NaN/inf; non-finite values become null.
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const BoxSummary& b) {
  if (b.n == 0) return {{"n", 0}};
  return {{"n", b.n},   {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"whisker_lo", b.whisker_lo},
          {"whisker_hi", b.whisker_hi}, {"outliers", b.outliers}};
}

inline nlohmann::json to_json(const VesselEval& v) {
  nlohmann::json j = {{"vessel", vessel_name(v.vessel)}, {"n", v.n}, {"n_pos", v.n_pos}, {"n_neg", v.n - v.n_pos}};
  j["auc"] = v.auc ? json_number(*v.auc) : nlohmann::json("undefined");
  if (v.ci) j["auc_ci95"] = {v.ci->lo, v.ci->hi};
  if (v.calibration) {
    j["brier"] = v.calibration->brier;
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : v.calibration->bins) {
      bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count},
                      {"mean_predicted", b.count ? json_number(b.mean_predicted) : nlohmann::json(nullptr)},
                      {"observed", b.count ? json_number(b.observed) : nlohmann::json(nullptr)}});
    }
    j["calibration"] = bins;
  } else {
    j["brier"] = "undefined";
  }
  if (v.spearman) {
    j["spearman"] = {{"rho", v.spearman->rho}, {"p", v.spearman->p}, {"n", v.spearman->n},
                     {"ties", v.spearman->ties}, {"p_method", v.spearman->p_method}};
  } else {
    j["spearman"] = "undefined";
  }
  nlohmann::json grades = nlohmann::json::object();
  for (std::size_t g = 0; g < v.grades.size(); ++g) grades[std::to_string(g)] = to_json(v.grades[g]);
  j["grade_boxes"] = grades;
  if (!v.undefined.empty()) j["undefined"] = v.undefined;
  return j;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    nlohmann::json vessels = nlohmann::json::array();
    double macro = 0.0;
    std::size_t defined = 0;
    for (const auto& v : g.vessels) {
      vessels.push_back(to_json(v));
      if (v.auc) {
        macro += *v.auc;
        ++defined;
      }
    }
    groups.push_back({{"name", g.name},
                      {"n", g.n},
                      {"macro_auc", defined ? nlohmann::json(macro / static_cast<double>(defined)) : nlohmann::json("undefined")},
                      {"vessels", vessels}});
  }
  return {{"bootstrap", {{"replicates", r.n_boot}, {"seed", r.seed}, {"method", "stratified percentile"}}},
          {"calibration_bins", r.bins},
          {"groups", groups}};
}

}  // namespace stenograph
