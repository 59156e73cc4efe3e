#pragma once

// Fold training loop. Each step: both views of every sample go through one
// tape; four per-task backward passes give the uncertainty-weighted task
// gradients; PCGrad combines their shared-trunk parts; heads and s_t take
// their gradients directly; AdamW applies the update.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "stenograph/augment.hpp"
#include "stenograph/checkpoint.hpp"
#include "stenograph/cohort.hpp"
#include "stenograph/folds.hpp"
#include "stenograph/metrics.hpp"
#include "stenograph/mtl.hpp"
#include "stenograph/net1d.hpp"

namespace stenograph {

// Z-scored inputs [12 x N] and binary targets for every cohort record.
struct ModelInputs {
  std::vector<Tensor> x;
  std::vector<std::array<double, kNumVessels>> y;

  std::size_t size() const { return x.size(); }
  std::size_t input_length() const { return x.empty() ? 0 : x[0].dim(1); }
};

inline ModelInputs prepare_inputs(const Cohort& cohort, std::size_t threads = 1) {
  ModelInputs out;
  out.x.resize(cohort.size());
  out.y.resize(cohort.size());
  std::size_t n = cohort.empty() ? 0 : cohort.records[0].ecg.signal.n_samples;
  for (const auto& r : cohort.records) {
    if (r.ecg.signal.n_samples != n) {
      fail(ErrorKind::shape, "record " + r.ecg.ecg_id + " has " + std::to_string(r.ecg.signal.n_samples) +
                                 " samples, cohort uses " + std::to_string(n));
    }
  }
  parallel_for(cohort.size(), threads, [&](std::size_t i) {
    const auto& r = cohort.records[i];
    EcgRecord z = zscore_normalize(r.ecg);
    out.x[i] = Tensor({kNumLeads, n}, std::move(z.signal.data));
    out.y[i] = r.labels.targets();
  });
  return out;
}

inline Tensor stack_inputs(const ModelInputs& inputs, std::span<const std::size_t> indices) {
  const std::size_t n = inputs.input_length();
  Tensor batch({indices.size(), kNumLeads, n});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& src = inputs.x[indices[i]].data();
    std::copy(src.begin(), src.end(), batch.ptr() + i * kNumLeads * n);
  }
  return batch;
}

struct EpochLog {
  int epoch = 0;  // 1-based
  TaskLosses loss{};
  std::array<double, kNumVessels> sigma{};
  double macro_auc = 0.0;  // NaN when no vessel is defined
  std::vector<Vessel> excluded;
  double lr = 0.0;
  std::size_t projections = 0;
};

struct TrainResult {
  ModelCheckpoint best;
  std::vector<EpochLog> log;
};

// Keeps the highest-scoring epoch; ties and NaN scores keep the earlier one.
class BestEpochTracker {
 public:
  template <typename MakeCheckpoint>
  bool offer(int epoch, double score, MakeCheckpoint&& make) {
    if (best_ && !(score > best_score_)) return false;
    best_ = make();
    best_->provenance.epoch = epoch;
    best_->provenance.val_macro_auc = score;
    best_score_ = score;
    return true;
  }
  bool has_value() const { return best_.has_value(); }
  const ModelCheckpoint& best() const { return *best_; }
  ModelCheckpoint take() { return std::move(*best_); }

 private:
  std::optional<ModelCheckpoint> best_;
  double best_score_ = 0.0;
};

struct TrainOptions {
  TrainConfig train;
  AugConfig augment;
  Net1DConfig net;
  int fold = 0;
  // Starting parameters; freshly initialised from net.seed when empty.
  std::optional<ParameterSet> initial_params;
  std::function<void(const EpochLog&)> on_epoch;
};

namespace detail {

// Per-sample chunk size for gradient accumulation. Fixed so that the
// reduction order does not depend on the thread count.
inline constexpr std::size_t kGradChunk = 4;

}  // namespace detail

inline TrainResult train_model(const ModelInputs& inputs, std::span<const std::size_t> train_idx,
                               std::span<const std::size_t> val_idx, const TrainOptions& opt) {
  const TrainConfig& cfg = opt.train;
  cfg.validate();
  opt.augment.validate();
  if (val_idx.empty()) fail(ErrorKind::data, "fold " + std::to_string(opt.fold) + ": validation fold is empty");
  if (train_idx.empty()) fail(ErrorKind::data, "fold " + std::to_string(opt.fold) + ": training set is empty");
  Net1DConfig net_cfg = opt.net;
  net_cfg.input_length = inputs.input_length();
  Net1D net = opt.initial_params ? Net1D(net_cfg, *opt.initial_params) : Net1D(net_cfg);
  TaskUncertainty unc;

  const std::size_t n_params = net.params().total_size();
  const auto shared = net.shared_mask();
  std::vector<std::uint8_t> decay = net.decay_mask();
  decay.resize(n_params + kNumVessels, 0);
  std::vector<double> flat = net.params().flatten();
  flat.insert(flat.end(), unc.s.begin(), unc.s.end());
  AdamState adam;

  const std::size_t batch_size = cfg.batch_size;
  const std::size_t steps_per_epoch = (train_idx.size() + batch_size - 1) / batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  const auto fold_key = static_cast<std::uint64_t>(opt.fold);
  std::size_t global_step = 0;

  TrainResult result;
  BestEpochTracker tracker;
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());

  for (int e = 0; e < cfg.epochs; ++e) {
    const auto epoch_key = static_cast<std::uint64_t>(e);
    Rng shuffle_rng = make_rng(cfg.seed, {hash_tag("shuffle"), fold_key, epoch_key});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = e + 1;
    double lr = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t b0 = step * batch_size;
      const std::size_t b1 = std::min(order.size(), b0 + batch_size);
      const std::size_t bn = b1 - b0;
      const double inv_b = 1.0 / static_cast<double>(bn);
      std::array<double, kNumVessels> w{};
      for (std::size_t t = 0; t < kNumVessels; ++t) w[t] = 0.5 * (cfg.uncertainty_weighting ? std::exp(-unc.s[t]) : 1.0);

      const std::size_t n_chunks = (bn + detail::kGradChunk - 1) / detail::kGradChunk;
      std::vector<std::vector<GradientVector>> chunk_grads(n_chunks);
      std::vector<TaskLosses> chunk_losses(n_chunks);
      parallel_for(n_chunks, cfg.threads, [&](std::size_t c) {
        auto& grads = chunk_grads[c];
        grads.assign(kNumVessels, GradientVector(n_params, 0.0));
        TaskLosses& losses = chunk_losses[c];
        losses.fill(0.0);
        const std::size_t c1 = std::min(bn, (c + 1) * detail::kGradChunk);
        for (std::size_t k = c * detail::kGradChunk; k < c1; ++k) {
          const std::size_t idx = order[b0 + k];
          const Tensor& x = inputs.x[idx];
          Signal view;
          view.n_samples = x.dim(1);
          view.data.assign(x.data().begin(), x.data().end());
          Rng aug_rng = make_rng(cfg.seed, {hash_tag("augment"), fold_key, epoch_key, static_cast<std::uint64_t>(idx)});
          view = augment(std::move(view), e, cfg.epochs, opt.augment, aug_rng);

          Tape tape(net.params());
          Var z0 = net.logits(tape, tape.constant(x));
          Var z1 = net.logits(tape, tape.constant(Tensor(x.shape(), std::move(view.data))));
          for (std::size_t t = 0; t < kNumVessels; ++t) {
            const Tensor target = Tensor::scalar(inputs.y[idx][t]);
            Var a = ad::select(tape, z0, t);
            Var b = ad::select(tape, z1, t);
            Var l = ad::mul_scalar(
                tape, ad::add(tape, ad::bce_with_logits(tape, a, target), ad::bce_with_logits(tape, b, target)), 0.5);
            losses[t] += tape.value(l).item();
            Var obj = ad::mul_scalar(tape, l, w[t] * inv_b);
            if (cfg.consistency_weight > 0.0) {
              Var d = ad::square(tape, ad::sub(tape, a, b));
              obj = ad::add(tape, obj, ad::mul_scalar(tape, d, cfg.consistency_weight * inv_b));
            }
            const GradientVector g = tape.backward(obj);
            for (std::size_t p = 0; p < n_params; ++p) grads[t][p] += g[p];
          }
        }
      });

      std::vector<GradientVector> task_grads(kNumVessels, GradientVector(n_params, 0.0));
      TaskLosses batch_loss{};
      for (std::size_t c = 0; c < n_chunks; ++c) {
        for (std::size_t t = 0; t < kNumVessels; ++t) {
          batch_loss[t] += chunk_losses[c][t];
          for (std::size_t p = 0; p < n_params; ++p) task_grads[t][p] += chunk_grads[c][t][p];
        }
      }
      for (double& l : batch_loss) l *= inv_b;

      // Shared trunk: surgery over the task gradients. Heads: plain sum.
      std::vector<GradientVector> trunk(kNumVessels, GradientVector(n_params, 0.0));
      GradientVector grad(n_params + kNumVessels, 0.0);
      for (std::size_t t = 0; t < kNumVessels; ++t) {
        for (std::size_t p = 0; p < n_params; ++p) {
          if (shared[p]) {
            trunk[t][p] = task_grads[t][p];
          } else {
            grad[p] += task_grads[t][p];
          }
        }
      }
      GradientVector combined;
      if (cfg.pcgrad) {
        Rng pc_rng = make_rng(cfg.seed, {hash_tag("pcgrad"), fold_key, static_cast<std::uint64_t>(global_step)});
        PcgradStats stats;
        combined = pcgrad(trunk, pc_rng, &stats);
        log.projections += stats.projections;
      } else {
        combined.assign(n_params, 0.0);
        for (const auto& g : trunk) {
          for (std::size_t p = 0; p < n_params; ++p) combined[p] += g[p];
        }
      }
      for (std::size_t p = 0; p < n_params; ++p) {
        if (shared[p]) grad[p] = combined[p];
      }
      if (cfg.uncertainty_weighting) {
        const auto ug = uncertainty_weighted_grad(batch_loss, unc.s);
        for (std::size_t t = 0; t < kNumVessels; ++t) grad[n_params + t] = ug.d_s[t];
      }

      lr = lr_at(global_step + 1, total_steps, cfg);
      adamw_step(flat, grad, adam, lr, cfg.weight_decay, decay);
      net.params().assign_flat(std::span<const double>(flat.data(), n_params));
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(n_params), flat.end(), unc.s.begin());
      ++global_step;
      for (std::size_t t = 0; t < kNumVessels; ++t) log.loss[t] += batch_loss[t] * static_cast<double>(bn);
    }
    for (double& l : log.loss) l /= static_cast<double>(order.size());
    for (std::size_t t = 0; t < kNumVessels; ++t) log.sigma[t] = unc.sigma(t);
    log.lr = lr;

    const Tensor probs = net.predict_proba(stack_inputs(inputs, val_idx), cfg.threads);
    std::vector<std::uint8_t> labels;
    for (std::size_t i : val_idx) {
      for (double y : inputs.y[i]) labels.push_back(y > 0.5 ? 1 : 0);
    }
    try {
      const auto m = macro_auc(probs.data(), labels);
      log.macro_auc = m.value;
      log.excluded = m.excluded;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::undefined_metric) throw;
      log.macro_auc = std::numeric_limits<double>::quiet_NaN();
      log.excluded.assign(kVessels.begin(), kVessels.end());
    }
    tracker.offer(log.epoch, log.macro_auc, [&] {
      ModelCheckpoint ckpt;
      ckpt.config = net_cfg;
      ckpt.params = net.params();
      ckpt.uncertainty = unc;
      ckpt.provenance.fold = opt.fold;
      ckpt.provenance.seed = cfg.seed;
      return ckpt;
    });
    if (opt.on_epoch) opt.on_epoch(log);
    result.log.push_back(std::move(log));
  }
  result.best = tracker.take();
  return result;
}

inline TrainResult train_fold(const Cohort& cohort, const ModelInputs& inputs, const FoldAssignment& folds,
                              std::size_t fold_id, TrainOptions opt) {
  if (fold_id >= folds.k) fail(ErrorKind::config, "fold " + std::to_string(fold_id) + " outside k=" + std::to_string(folds.k));
  const auto train_idx = folds.training_indices(cohort, fold_id);
  const auto val_idx = folds.validation_indices(cohort, fold_id);
  opt.fold = static_cast<int>(fold_id);
  return train_model(inputs, train_idx, val_idx, opt);
}

inline std::string train_log_header() {
  std::string h = "epoch";
  for (Vessel v : kVessels) h += ",loss_" + std::string(vessel_name(v));
  for (Vessel v : kVessels) h += ",sigma_" + std::string(vessel_name(v));
  return h + ",macro_auc,lr";
}

inline std::string train_log_row(const EpochLog& log) {
  std::ostringstream os;
  os << std::setprecision(17) << log.epoch;
  for (double l : log.loss) os << ',' << l;
  for (double s : log.sigma) os << ',' << s;
  os << ',' << log.macro_auc << ',' << log.lr;
  return os.str();
}

}  // namespace stenograph
