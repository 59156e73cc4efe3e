#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stenograph/autodiff.hpp"

namespace stenograph {

// Builds a scalar loss on the given tape; must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor for the relative error, so gradients that are
  // essentially zero are compared on an absolute scale.
  double relative_floor = 1e-6;
  // Check at most this many elements per parameter tensor (evenly strided);
  // 0 checks everything.
  std::size_t max_elements_per_param = 0;
};

struct ParamCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // elements excluded: a relu changed branch within +-step
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;

  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares reverse-mode gradients with central finite differences for every
// (or a strided subset of) parameter element. Elements whose +-step
// perturbation flips any relu are reported as kinks and excluded.
inline GradCheckReport grad_check(const LossBuilder& build, ParameterSet& params,
                                  const GradCheckOptions& options = {}) {
  GradientVector analytic;
  std::uint64_t base_signature = 0;
  {
    Tape tape(params);
    Var loss = build(tape);
    base_signature = tape.activation_signature();
    analytic = tape.backward(loss);
  }

  auto evaluate = [&](std::uint64_t& signature) {
    Tape tape(params);
    Var loss = build(tape);
    signature = tape.activation_signature();
    return tape.value(loss).item();
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < params.count(); ++p) {
    ParamCheck pc;
    pc.name = params.name(p);
    Tensor& value = params.value(p);
    const std::size_t n = value.size();
    std::size_t stride = 1;
    if (options.max_elements_per_param > 0 && n > options.max_elements_per_param) {
      stride = (n + options.max_elements_per_param - 1) / options.max_elements_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double original = value[i];
      std::uint64_t sig_plus = 0, sig_minus = 0;
      value[i] = original + options.step;
      const double f_plus = evaluate(sig_plus);
      value[i] = original - options.step;
      const double f_minus = evaluate(sig_minus);
      value[i] = original;
      if (sig_plus != base_signature || sig_minus != base_signature) {
        ++pc.kinks;
        continue;
      }
      const double numeric = (f_plus - f_minus) / (2.0 * options.step);
      const double a = analytic[params.offset(p) + i];
      pc.max_rel_error = std::max(pc.max_rel_error, relative_error(a, numeric, options.relative_floor));
      ++pc.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.checked += pc.checked;
    report.kinks += pc.kinks;
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace stenograph
