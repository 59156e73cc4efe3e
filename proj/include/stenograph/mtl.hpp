#pragma once

// Multi-task objective and optimizer pieces: per-task BCE over two views,
// homoscedastic uncertainty weighting, PCGrad gradient surgery, AdamW and the
// warmup + cosine learning-rate schedule.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stenograph/autodiff.hpp"
#include "stenograph/common.hpp"
#include "stenograph/net1d.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

using TaskLosses = std::array<double, kNumVessels>;

// s_t = log sigma_t^2 per task.
struct TaskUncertainty {
  std::array<double, kNumVessels> s{};

  double sigma(std::size_t t) const { return std::exp(0.5 * s[t]); }
};

inline double bce_value(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline void require_binary(double y) {
  if (y != 0.0 && y != 1.0) fail(ErrorKind::data, "label " + std::to_string(y) + " is not 0 or 1");
}

// L_t = mean over samples and both views of BCE(logit_t, label_t).
// labels [B x 4].
inline TaskLosses task_losses(const Net1D& net, const Tensor& batch, const Tensor& aug_batch,
                              const Tensor& labels, std::size_t threads = 1) {
  if (batch.shape() != aug_batch.shape()) {
    fail(ErrorKind::shape, "task_losses: views differ in shape " + shape_str(batch.shape()) + " vs " +
                               shape_str(aug_batch.shape()));
  }
  if (batch.rank() != 3 || labels.shape() != Shape{batch.dim(0), kNumVessels}) {
    fail(ErrorKind::shape, "task_losses: labels " + shape_str(labels.shape()) + " for batch " +
                               shape_str(batch.shape()));
  }
  for (double y : labels.data()) require_binary(y);
  const Tensor z0 = net.forward(batch, threads);
  const Tensor z1 = net.forward(aug_batch, threads);
  const std::size_t b = batch.dim(0);
  TaskLosses out{};
  for (std::size_t t = 0; t < kNumVessels; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t k = i * kNumVessels + t;
      acc += bce_value(z0[k], labels[k]) + bce_value(z1[k], labels[k]);
    }
    out[t] = acc / (2.0 * static_cast<double>(b));
  }
  return out;
}

// sum_t L_t exp(-s_t) / 2 + s_t / 2, i.e. L/(2 sigma^2) + log sigma.
inline double uncertainty_weighted_loss(std::span<const double> losses, std::span<const double> s) {
  if (losses.size() != s.size()) fail(ErrorKind::shape, "uncertainty_weighted_loss: length mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) total += 0.5 * losses[t] * std::exp(-s[t]) + 0.5 * s[t];
  return total;
}

inline Var uncertainty_weighted_loss(Tape& tape, std::span<const Var> losses, std::span<const Var> s) {
  if (losses.size() != s.size() || losses.empty()) {
    fail(ErrorKind::shape, "uncertainty_weighted_loss: length mismatch");
  }
  Var total;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    Var precision = ad::exp(tape, ad::mul_scalar(tape, s[t], -1.0));
    Var term = ad::mul_scalar(tape, ad::add(tape, ad::mul(tape, losses[t], precision), s[t]), 0.5);
    total = total.valid() ? ad::add(tape, total, term) : term;
  }
  return total;
}

struct UncertaintyGrad {
  double total = 0.0;
  std::vector<double> d_loss;
  std::vector<double> d_s;
};

// Value and gradients of the weighted objective, taken through the tape.
inline UncertaintyGrad uncertainty_weighted_grad(std::span<const double> losses, std::span<const double> s) {
  if (losses.size() != s.size()) fail(ErrorKind::shape, "uncertainty_weighted_grad: length mismatch");
  Tape tape;
  std::vector<Var> lv, sv;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    lv.push_back(tape.input(Tensor::scalar(losses[t])));
    sv.push_back(tape.input(Tensor::scalar(s[t])));
  }
  Var total = uncertainty_weighted_loss(tape, lv, sv);
  tape.backward(total);
  UncertaintyGrad out;
  out.total = tape.value(total).item();
  for (std::size_t t = 0; t < losses.size(); ++t) {
    out.d_loss.push_back(tape.grad(lv[t]).item());
    out.d_s.push_back(tape.grad(sv[t]).item());
  }
  return out;
}

struct PcgradStats {
  std::size_t projections = 0;
  std::size_t cone_projections = 0;
};

struct PcgradProjection {
  std::vector<GradientVector> projected;          // g_i' per task
  std::vector<std::vector<std::size_t>> triggered;  // j that projected g_i
};

namespace detail {

// Euclidean projection of y onto the cone {x : x . c >= 0 for all c}. The
// KKT point x = y + C^T lambda, lambda >= 0, is found by enumerating active
// sets; the constraint count is at most T - 1.
inline GradientVector project_onto_cone(const GradientVector& y, const std::vector<const GradientVector*>& cs) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const auto dim = static_cast<Eigen::Index>(y.size());
  const std::size_t m = cs.size();
  if (m > 20) fail(ErrorKind::numerical, "pcgrad: too many conflicting tasks for exact projection");
  const Eigen::Map<const VectorXd> yv(y.data(), dim);
  double scale = yv.squaredNorm();
  for (const auto* c : cs) scale = std::max(scale, Eigen::Map<const VectorXd>(c->data(), dim).squaredNorm());
  const double tol = 1e-12 * std::max(scale, 1.0);
  VectorXd best = VectorXd::Zero(dim);
  double best_dist = (best - yv).squaredNorm();
  for (std::size_t set = 1; set < (std::size_t{1} << m); ++set) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < m; ++j) {
      if (set >> j & 1) active.push_back(j);
    }
    MatrixXd ct(dim, static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      ct.col(static_cast<Eigen::Index>(a)) = Eigen::Map<const VectorXd>(cs[active[a]]->data(), dim);
    }
    const VectorXd lambda = ct.completeOrthogonalDecomposition().solve(-yv);
    if ((lambda.array() < 0.0).any()) continue;
    const VectorXd x = yv + ct * lambda;
    bool feasible = true;
    for (const auto* c : cs) {
      if (x.dot(Eigen::Map<const VectorXd>(c->data(), dim)) < -tol) feasible = false;
    }
    const double dist = (x - yv).squaredNorm();
    if (feasible && dist < best_dist) {
      best = x;
      best_dist = dist;
    }
  }
  return GradientVector(best.data(), best.data() + dim);
}

}  // namespace detail

// Gradient surgery. Each g_i is projected onto the normal plane of every
// other task gradient it conflicts with (g_i . g_j < 0), visiting j in a
// random order and always using the original g_j. A single sequential pass
// can leave g_i' conflicting with a triggered g_j, or with a g_j that
// conflicted with the original g_i; g_i' is then replaced by its exact
// projection onto the cone where none of those g_j conflicts.
inline PcgradProjection pcgrad_project(const std::vector<GradientVector>& grads, Rng& rng,
                                       PcgradStats* stats = nullptr) {
  constexpr double kMinNorm2 = 1e-12;
  constexpr double kTolerance = 1e-10;
  PcgradProjection out;
  if (grads.empty()) return out;
  const std::size_t dim = grads[0].size();
  for (const auto& g : grads) {
    if (g.size() != dim) fail(ErrorKind::shape, "pcgrad: gradient length mismatch");
  }
  const std::size_t n = grads.size();
  auto dot = [dim](const GradientVector& a, const GradientVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<double> norm2(n);
  for (std::size_t j = 0; j < n; ++j) norm2[j] = dot(grads[j], grads[j]);

  out.projected = grads;
  out.triggered.resize(n);
  PcgradStats local;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::shuffle(order.begin(), order.end(), rng);
    GradientVector& gi = out.projected[i];
    std::vector<std::size_t>& triggered = out.triggered[i];
    std::vector<std::size_t> constrained;
    for (std::size_t j : order) {
      if (norm2[j] >= kMinNorm2 && dot(grads[i], grads[j]) < 0.0) constrained.push_back(j);
    }
    for (std::size_t j : order) {
      const double d = dot(gi, grads[j]);
      if (d >= 0.0 || norm2[j] < kMinNorm2) continue;
      const double c = d / norm2[j];
      for (std::size_t k = 0; k < dim; ++k) gi[k] -= c * grads[j][k];
      ++local.projections;
      triggered.push_back(j);
      if (std::find(constrained.begin(), constrained.end(), j) == constrained.end()) constrained.push_back(j);
    }
    bool clean = true;
    for (std::size_t j : constrained) {
      if (dot(gi, grads[j]) < -kTolerance) clean = false;
    }
    if (!clean) {
      std::vector<const GradientVector*> cs;
      for (std::size_t j : constrained) cs.push_back(&grads[j]);
      gi = detail::project_onto_cone(gi, cs);
      ++local.cone_projections;
    }
  }
  if (stats) *stats = local;
  return out;
}

// sum_i g_i' from pcgrad_project.
inline GradientVector pcgrad(const std::vector<GradientVector>& grads, Rng& rng, PcgradStats* stats = nullptr) {
  const auto p = pcgrad_project(grads, rng, stats);
  if (p.projected.empty()) return {};
  GradientVector out(p.projected[0].size(), 0.0);
  for (const auto& g : p.projected) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += g[k];
  }
  return out;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// AdamW, beta = (0.9, 0.999), eps = 1e-8. Decay is decoupled and applied
// only where decay_mask is set (all elements when the mask is empty).
inline void adamw_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr,
                       double weight_decay, std::span<const std::uint8_t> decay_mask = {}) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (grad.size() != params.size() || (!decay_mask.empty() && decay_mask.size() != params.size())) {
    fail(ErrorKind::shape, "adamw_step: parameter/gradient length mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) fail(ErrorKind::shape, "adamw_step: optimizer state length mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (weight_decay != 0.0 && (decay_mask.empty() || decay_mask[i])) params[i] -= lr * weight_decay * params[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + eps);
  }
}

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  double peak_lr = 1e-3;
  double warmup_fraction = 0.05;
  double weight_decay = 1e-4;
  bool pcgrad = true;
  bool uncertainty_weighting = true;
  // Optional MSE between original and augmented logits.
  double consistency_weight = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (epochs < 1) fail(ErrorKind::config, "train.epochs must be >= 1");
    if (batch_size < 1) fail(ErrorKind::config, "train.batch_size must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
      fail(ErrorKind::config, "train.warmup_fraction must be in [0, 1)");
    }
    if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) fail(ErrorKind::config, "train.peak_lr must be > 0");
    if (!(weight_decay >= 0.0) || !(consistency_weight >= 0.0)) {
      fail(ErrorKind::config, "train.weight_decay and train.consistency_weight must be >= 0");
    }
  }
};

// Linear warmup 0 -> peak over the first warmup_fraction of steps, then
// cosine decay peak -> 0.
inline double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0 || step > total_steps) {
    fail(ErrorKind::config, "lr_at: step " + std::to_string(step) + " outside [0, " +
                                std::to_string(total_steps) + "]");
  }
  const double total = static_cast<double>(total_steps);
  const double warm = cfg.warmup_fraction * total;
  const double s = static_cast<double>(step);
  if (s < warm) return cfg.peak_lr * s / warm;
  if (warm >= total) return cfg.peak_lr;
  const double progress = (s - warm) / (total - warm);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace stenograph
