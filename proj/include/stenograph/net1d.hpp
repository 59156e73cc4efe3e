#pragma once

// Compact Net1D-style 1-D CNN: a stem convolution, a stack of stride-2
// residual blocks with projection shortcuts, global average pooling, and one
// linear logit per vessel (head order RCA, LM, LAD, LCX).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stenograph/autodiff.hpp"
#include "stenograph/common.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

struct Net1DConfig {
  static constexpr std::size_t kHeads = kNumVessels;

  std::size_t leads = kNumLeads;
  std::size_t input_length = 5000;
  std::size_t stem_channels = 16;
  std::size_t stem_stride = 1;
  std::size_t blocks = 4;
  std::size_t kernel = 7;
  // Channels double per block up to this cap.
  std::size_t max_channels = 64;
  std::uint64_t seed = 0;

  void validate() const {
    if (leads != kNumLeads) fail(ErrorKind::config, "Net1D expects 12 input leads");
    if (input_length == 0 || stem_channels == 0 || stem_stride == 0 || kernel == 0 || max_channels == 0) {
      fail(ErrorKind::config, "Net1D sizes must be positive");
    }
    if (kernel % 2 == 0) fail(ErrorKind::config, "Net1D kernel size must be odd");
    std::size_t len = (input_length - 1) / stem_stride + 1;
    for (std::size_t b = 0; b < blocks; ++b) len = (len - 1) / 2 + 1;
    if (len == 0) fail(ErrorKind::config, "Net1D input too short for the configured depth");
  }

  std::vector<std::size_t> channels() const {
    std::vector<std::size_t> c{stem_channels};
    for (std::size_t b = 0; b < blocks; ++b) c.push_back(std::min(2 * c.back(), std::max(max_channels, stem_channels)));
    return c;
  }

  friend bool operator==(const Net1DConfig&, const Net1DConfig&) = default;
};

class Net1D {
 public:
  explicit Net1D(Net1DConfig config) : config_(config) {
    config_.validate();
    Rng rng = make_rng(config_.seed, {hash_tag("net1d-init")});
    for (const auto& spec : layout()) {
      Tensor t(spec.shape);
      if (spec.fan_in > 0) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(spec.fan_in)));
        for (double& v : t.data()) v = dist(rng);
      }
      params_.add(spec.name, std::move(t));
    }
  }

  // Adopts existing parameters; names and shapes must match the config.
  Net1D(Net1DConfig config, ParameterSet params) : config_(config), params_(std::move(params)) {
    config_.validate();
    const auto specs = layout();
    if (specs.size() != params_.count()) {
      fail(ErrorKind::shape, "parameter count " + std::to_string(params_.count()) +
                                 " does not match Net1D config (" + std::to_string(specs.size()) + ")");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (params_.name(i) != specs[i].name || params_.value(i).shape() != specs[i].shape) {
        fail(ErrorKind::shape, "parameter " + params_.name(i) + " " +
                                   shape_str(params_.value(i).shape()) + " does not match expected " +
                                   specs[i].name + " " + shape_str(specs[i].shape));
      }
    }
  }

  const Net1DConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  std::size_t feature_dim() const { return config_.channels().back(); }

  // Head parameters are task-exclusive; everything else is the shared trunk.
  bool is_shared(std::size_t param_index) const {
    return params_.name(param_index).rfind("head.", 0) != 0;
  }

  // Per-element mask over the flat parameter vector.
  std::vector<std::uint8_t> shared_mask() const {
    std::vector<std::uint8_t> mask(params_.total_size(), 0);
    for (std::size_t i = 0; i < params_.count(); ++i) {
      if (!is_shared(i)) continue;
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(params_.offset(i)), params_.value(i).size(), 1);
    }
    return mask;
  }

  // Weight tensors (rank >= 2) decay; biases do not.
  std::vector<std::uint8_t> decay_mask() const {
    std::vector<std::uint8_t> mask(params_.total_size(), 0);
    for (std::size_t i = 0; i < params_.count(); ++i) {
      if (params_.value(i).rank() < 2) continue;
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(params_.offset(i)), params_.value(i).size(), 1);
    }
    return mask;
  }

  // Pooled trunk features for one record [12 x N].
  Var features(Tape& tape, Var x) const {
    const auto& shape = tape.value(x).shape();
    if (shape.size() != 2 || shape[0] != config_.leads || shape[1] != config_.input_length) {
      fail(ErrorKind::shape, "Net1D input " + shape_str(shape) + ", expected [12x" +
                                 std::to_string(config_.input_length) + "]");
    }
    const std::size_t pad = config_.kernel / 2;
    std::size_t p = 0;
    Var h = ad::conv1d(tape, x, tape.param(p), tape.param(p + 1), config_.stem_stride, pad);
    h = ad::relu(tape, h);
    p += 2;
    for (std::size_t b = 0; b < config_.blocks; ++b) {
      Var main = ad::conv1d(tape, h, tape.param(p), tape.param(p + 1), 2, pad);
      Var skip = ad::conv1d(tape, h, tape.param(p + 2), std::nullopt, 2, 0);
      h = ad::relu(tape, ad::add(tape, main, skip));
      p += 3;
    }
    return ad::global_avg_pool(tape, h);
  }

  // Logits [4] for one record.
  Var logits(Tape& tape, Var x) const {
    Var f = features(tape, x);
    const std::size_t p = params_.count() - 2;
    return ad::dense(tape, f, tape.param(p), tape.param(p + 1));
  }

  // batch [B x 12 x N] -> logits [B x 4]
  Tensor forward(const Tensor& batch, std::size_t threads = 1) const {
    if (batch.rank() != 3) fail(ErrorKind::shape, "forward expects [B x 12 x N], got " + shape_str(batch.shape()));
    const std::size_t b = batch.dim(0), per = batch.dim(1) * batch.dim(2);
    Tensor out({b, Net1DConfig::kHeads});
    parallel_for(b, threads, [&](std::size_t i) {
      Tape tape(params_);
      Tensor x({batch.dim(1), batch.dim(2)},
               std::vector<double>(batch.ptr() + i * per, batch.ptr() + (i + 1) * per));
      const Tensor& z = tape.value(logits(tape, tape.constant(std::move(x))));
      std::copy(z.data().begin(), z.data().end(), out.ptr() + i * Net1DConfig::kHeads);
    });
    return out;
  }

  Tensor predict_proba(const Tensor& batch, std::size_t threads = 1) const {
    Tensor z = forward(batch, threads);
    for (double& v : z.data()) v = ad::sigmoid_value(v);
    return z;
  }

 private:
  struct ParamSpec {
    std::string name;
    Shape shape;
    std::size_t fan_in;  // 0: zero-initialised bias
  };

  std::vector<ParamSpec> layout() const {
    const auto ch = config_.channels();
    const std::size_t k = config_.kernel;
    std::vector<ParamSpec> specs;
    specs.push_back({"stem.w", {ch[0], config_.leads, k}, config_.leads * k});
    specs.push_back({"stem.b", {ch[0]}, 0});
    for (std::size_t b = 0; b < config_.blocks; ++b) {
      const std::string prefix = "block" + std::to_string(b + 1);
      specs.push_back({prefix + ".conv.w", {ch[b + 1], ch[b], k}, ch[b] * k});
      specs.push_back({prefix + ".conv.b", {ch[b + 1]}, 0});
      specs.push_back({prefix + ".skip.w", {ch[b + 1], ch[b], 1}, ch[b]});
    }
    specs.push_back({"head.w", {Net1DConfig::kHeads, ch.back()}, ch.back()});
    specs.push_back({"head.b", {Net1DConfig::kHeads}, 0});
    return specs;
  }

  Net1DConfig config_;
  ParameterSet params_;
};

}  // namespace stenograph
