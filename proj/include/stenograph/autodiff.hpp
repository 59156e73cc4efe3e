#pragma once

// Reverse-mode automatic differentiation over dense Tensors.
//
// A Tape is built fresh for every forward pass: each op computes its value
// eagerly and records a closure that propagates the output gradient to its
// inputs. backward() replays the closures in exact reverse order, summing
// gradients where a value fans out. Parameters live in a ParameterSet whose
// registration order defines the layout of the flat GradientVector.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stenograph/common.hpp"
#include "stenograph/tensor.hpp"

namespace stenograph {

using GradientVector = std::vector<double>;

class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value) {
    if (find(name)) fail(ErrorKind::config, "duplicate parameter name '" + name + "'");
    offsets_.push_back(total_);
    total_ += value.size();
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
  }

  std::size_t count() const { return values_.size(); }
  std::size_t total_size() const { return total_; }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& value(std::size_t i) { return values_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return std::nullopt;
  }

  std::vector<double> flatten() const {
    std::vector<double> flat;
    flat.reserve(total_);
    for (const auto& v : values_) flat.insert(flat.end(), v.data().begin(), v.data().end());
    return flat;
  }

  void assign_flat(std::span<const double> flat) {
    if (flat.size() != total_) {
      fail(ErrorKind::shape, "flat parameter vector has length " + std::to_string(flat.size()) +
                                 ", expected " + std::to_string(total_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      auto dst = values_[i].data();
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                flat.begin() + static_cast<std::ptrdiff_t>(offsets_[i] + dst.size()), dst.begin());
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  explicit Tape(const ParameterSet& params)
      : params_(&params), param_nodes_(params.count(), Var::npos) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a registered parameter. Repeated calls return the same node.
  Var param(std::size_t index) {
    if (!params_ || index >= params_->count()) {
      fail(ErrorKind::config, "parameter index " + std::to_string(index) + " not registered");
    }
    if (param_nodes_[index] == Var::npos) {
      Node n;
      n.external = &params_->value(index);
      n.requires_grad = true;
      n.param_index = index;
      nodes_.push_back(std::move(n));
      param_nodes_[index] = nodes_.size() - 1;
    }
    return Var{param_nodes_[index]};
  }

  Var param(std::string_view name) {
    const auto idx = params_ ? params_->find(name) : std::nullopt;
    if (!idx) fail(ErrorKind::config, "unknown parameter '" + std::string(name) + "'");
    return param(*idx);
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Differentiable leaf outside the registry; read its gradient with grad().
  Var input(Tensor value) { return leaf(std::move(value), true); }

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  // Invalid (default) Vars among the inputs are ignored.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
    if (!value.all_finite()) {
      fail(ErrorKind::numerical, "non-finite value produced on tape (node " +
                                     std::to_string(nodes_.size()) + ")");
    }
    Node n;
    n.value = std::move(value);
    for (Var in : inputs) n.requires_grad = n.requires_grad || (in.valid() && requires_grad(in));
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  const Tensor& value(Var v) const {
    const Node& n = node(v);
    return n.external ? *n.external : n.value;
  }

  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // Gradient accumulated at v by the last backward(); zeros if none reached it.
  Tensor grad(Var v) const {
    const Node& n = node(v);
    if (n.has_grad) return n.grad;
    return Tensor(value(v).shape());
  }

  // Accumulation buffer used by backward closures.
  std::span<double> grad_buffer(Var v) {
    Node& n = node(v);
    if (!n.has_grad) {
      n.grad = Tensor(value(v).shape());
      n.has_grad = true;
    }
    return n.grad.data();
  }

  std::span<const double> out_grad(std::size_t self) const { return nodes_[self].grad.data(); }

  std::size_t size() const { return nodes_.size(); }

  // Gradient of a scalar loss w.r.t. every registered parameter, flattened in
  // registry order. Previous gradients are discarded first.
  GradientVector backward(Var loss) {
    if (value(loss).size() != 1) {
      fail(ErrorKind::shape, "backward() requires a scalar loss, got shape " +
                                 shape_str(value(loss).shape()));
    }
    for (Node& n : nodes_) {
      n.has_grad = false;
      n.grad = Tensor();
    }
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.has_grad && n.backward) n.backward(*this, i);
    }
    GradientVector flat(params_ ? params_->total_size() : 0, 0.0);
    if (params_) {
      for (std::size_t p = 0; p < param_nodes_.size(); ++p) {
        const std::size_t id = param_nodes_[p];
        if (id == Var::npos || !nodes_[id].has_grad) continue;
        const auto g = nodes_[id].grad.data();
        std::copy(g.begin(), g.end(), flat.begin() + static_cast<std::ptrdiff_t>(params_->offset(p)));
      }
    }
    return flat;
  }

  // Running fingerprint of relu activation patterns; two forward passes with
  // the same signature took the same branch at every relu.
  void mix_activation_signature(std::uint64_t h) {
    activation_signature_ = (activation_signature_ ^ h) * 0x100000001b3ULL;
  }
  std::uint64_t activation_signature() const { return activation_signature_; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::optional<std::size_t> param_index;
    BackwardFn backward;
  };

  Var leaf(Tensor value, bool requires_grad) {
    if (!value.all_finite()) fail(ErrorKind::numerical, "non-finite leaf value");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Node& node(Var v) {
    if (v.id >= nodes_.size()) fail(ErrorKind::config, "invalid tape variable");
    return nodes_[v.id];
  }
  const Node& node(Var v) const {
    if (v.id >= nodes_.size()) fail(ErrorKind::config, "invalid tape variable");
    return nodes_[v.id];
  }

  const ParameterSet* params_ = nullptr;
  std::vector<std::size_t> param_nodes_;
  std::vector<Node> nodes_;
  std::uint64_t activation_signature_ = 0xcbf29ce484222325ULL;
};

// ---------------------------------------------------------------------------
// Primitive ops

namespace ad {

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::shape, std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                               shape_str(b.shape()));
  }
}

template <typename Fwd, typename Deriv>
Var unary(Tape& tape, Var x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = tape.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return tape.record(std::move(out), {x}, [x, deriv](Tape& t, std::size_t self) {
    if (!t.requires_grad(x)) return;
    const auto g = t.out_grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& yv = t.value(Var{self});
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

// Output length of a 1-D convolution.
inline std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                        std::size_t padding) {
  if (stride == 0) fail(ErrorKind::shape, "conv1d: stride must be >= 1");
  if (kernel > length + 2 * padding) {
    fail(ErrorKind::shape, "conv1d: kernel " + std::to_string(kernel) +
                               " longer than padded input " + std::to_string(length + 2 * padding));
  }
  return (length + 2 * padding - kernel) / stride + 1;
}

// Cross-correlation. input [C_in x L], kernels [C_out x C_in x K], optional
// bias [C_out] -> [C_out x L_out]. Lowered to im2col + GEMM.
inline Var conv1d(Tape& tape, Var input, Var kernels, std::optional<Var> bias, std::size_t stride,
                  std::size_t padding) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapMat = Eigen::Map<RowMat>;
  using ConstMapMat = Eigen::Map<const RowMat>;

  const Tensor& x = tape.value(input);
  const Tensor& w = tape.value(kernels);
  if (x.rank() != 2 || w.rank() != 3 || w.dim(1) != x.dim(0)) {
    fail(ErrorKind::shape, "conv1d: input " + shape_str(x.shape()) + " incompatible with kernels " +
                               shape_str(w.shape()));
  }
  const std::size_t cin = x.dim(0), len = x.dim(1), cout = w.dim(0), k = w.dim(2);
  const std::size_t lout = conv1d_output_length(len, k, stride, padding);
  if (bias) {
    const Tensor& b = tape.value(*bias);
    if (b.rank() != 1 || b.dim(0) != cout) {
      fail(ErrorKind::shape, "conv1d: bias " + shape_str(b.shape()) + " for " +
                                 std::to_string(cout) + " output channels");
    }
  }
  const std::size_t rows = cin * k;
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const auto n = static_cast<std::ptrdiff_t>(len);

  // cols[(ci*k + kk) * lout + o] = x[ci, o*stride + kk - padding], zero outside.
  auto cols = std::make_shared<std::vector<double>>(rows * lout, 0.0);
  for (std::size_t ci = 0; ci < cin; ++ci) {
    const double* xrow = x.ptr() + ci * len;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double* c = cols->data() + (ci * k + kk) * lout;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
      for (std::size_t o = 0; o < lout; ++o) {
        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(o) * s + off;
        if (i >= 0 && i < n) c[o] = xrow[i];
      }
    }
  }

  Tensor y({cout, lout});
  MapMat ym(y.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(lout));
  ym.noalias() = ConstMapMat(w.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)) *
                 ConstMapMat(cols->data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lout));
  if (bias) {
    const Tensor& b = tape.value(*bias);
    for (std::size_t co = 0; co < cout; ++co) {
      double* yrow = y.ptr() + co * lout;
      for (std::size_t o = 0; o < lout; ++o) yrow[o] += b[co];
    }
  }

  return tape.record(
      std::move(y), {input, kernels, bias.value_or(Var{})},
      [=](Tape& t, std::size_t self) {
        const auto gy = t.out_grad(self);
        const ConstMapMat gym(gy.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(lout));
        if (bias && t.requires_grad(*bias)) {
          auto gb = t.grad_buffer(*bias);
          for (std::size_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (std::size_t o = 0; o < lout; ++o) acc += gy[co * lout + o];
            gb[co] += acc;
          }
        }
        if (t.requires_grad(kernels)) {
          auto gw = t.grad_buffer(kernels);
          MapMat(gw.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)).noalias() +=
              gym * ConstMapMat(cols->data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lout))
                        .transpose();
        }
        if (t.requires_grad(input)) {
          const Tensor& wv = t.value(kernels);
          RowMat gcols =
              ConstMapMat(wv.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)).transpose() *
              gym;
          auto gx = t.grad_buffer(input);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            double* gxrow = gx.data() + ci * len;
            for (std::size_t kk = 0; kk < k; ++kk) {
              const double* c = gcols.data() + (ci * k + kk) * lout;
              const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
              for (std::size_t o = 0; o < lout; ++o) {
                const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(o) * s + off;
                if (i >= 0 && i < n) gxrow[i] += c[o];
              }
            }
          }
        }
      });
}

inline Var conv1d(Tape& tape, Var input, Var kernels, std::size_t stride, std::size_t padding) {
  return conv1d(tape, input, kernels, std::nullopt, stride, padding);
}

// x [in], W [out x in], b [out] -> [out]
inline Var dense(Tape& tape, Var x, Var weight, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& w = tape.value(weight);
  const Tensor& b = tape.value(bias);
  if (xv.rank() != 1 || w.rank() != 2 || w.dim(1) != xv.dim(0) || b.rank() != 1 ||
      b.dim(0) != w.dim(0)) {
    fail(ErrorKind::shape, "dense: x " + shape_str(xv.shape()) + ", W " + shape_str(w.shape()) +
                               ", b " + shape_str(b.shape()));
  }
  const std::size_t in = xv.dim(0), out = w.dim(0);
  Tensor y({out});
  for (std::size_t o = 0; o < out; ++o) y[o] = b[o] + detail::dot(w.ptr() + o * in, xv.ptr(), in);
  return tape.record(std::move(y), {x, weight, bias}, [=](Tape& t, std::size_t self) {
    const auto gy = t.out_grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& w = t.value(weight);
    if (t.requires_grad(bias)) {
      auto gb = t.grad_buffer(bias);
      for (std::size_t o = 0; o < out; ++o) gb[o] += gy[o];
    }
    if (t.requires_grad(weight)) {
      auto gw = t.grad_buffer(weight);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += gy[o] * xv[i];
      }
    }
    if (t.requires_grad(x)) {
      auto gx = t.grad_buffer(x);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) gx[i] += gy[o] * w[o * in + i];
      }
    }
  });
}

// relu'(0) is taken as 0.
inline Var relu(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    h ^= xv[i] > 0.0 ? 0x9fULL : 0x3aULL;
    h *= 0x100000001b3ULL;
  }
  tape.mix_activation_signature(h);
  return detail::unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double xv, double) { return xv > 0.0 ? 1.0 : 0.0; });
}

inline double sigmoid_value(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Var sigmoid(Tape& tape, Var x) {
  return detail::unary(tape, x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

inline Var exp(Tape& tape, Var x) {
  return detail::unary(
      tape, x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

inline Var log(Tape& tape, Var x) {
  for (double v : tape.value(x).data()) {
    if (!(v > 0.0)) fail(ErrorKind::numerical, "log of non-positive value");
  }
  return detail::unary(
      tape, x, [](double v) { return std::log(v); }, [](double xv, double) { return 1.0 / xv; });
}

inline Var square(Tape& tape, Var x) {
  return detail::unary(
      tape, x, [](double v) { return v * v; }, [](double xv, double) { return 2.0 * xv; });
}

inline Var mul_scalar(Tape& tape, Var x, double c) {
  return detail::unary(
      tape, x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Var add_scalar(Tape& tape, Var x, double c) {
  return detail::unary(
      tape, x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

inline Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  detail::require_same_shape(av, bv, "add");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto g = t.out_grad(self);
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto gv = t.grad_buffer(v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += g[i];
    }
  });
}

inline Var sub(Tape& tape, Var a, Var b) { return add(tape, a, mul_scalar(tape, b, -1.0)); }

inline Var mul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  detail::require_same_shape(av, bv, "mul");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto g = t.out_grad(self);
    if (t.requires_grad(a)) {
      const Tensor& bv = t.value(b);
      auto ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& av = t.value(a);
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

inline Var sum(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return tape.record(Tensor::scalar(s), {x}, [x](Tape& t, std::size_t self) {
    if (!t.requires_grad(x)) return;
    const double g = t.out_grad(self)[0];
    for (double& v : t.grad_buffer(x)) v += g;
  });
}

inline Var mean(Tape& tape, Var x) {
  const double n = static_cast<double>(tape.value(x).size());
  return mul_scalar(tape, sum(tape, x), 1.0 / n);
}

// [C x L] -> [C]
inline Var global_avg_pool(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.rank() != 2) fail(ErrorKind::shape, "global_avg_pool expects [C x L], got " + shape_str(xv.shape()));
  const std::size_t c = xv.dim(0), len = xv.dim(1);
  Tensor y({c});
  for (std::size_t i = 0; i < c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += xv[i * len + j];
    y[i] = s / static_cast<double>(len);
  }
  return tape.record(std::move(y), {x}, [x, c, len](Tape& t, std::size_t self) {
    if (!t.requires_grad(x)) return;
    const auto g = t.out_grad(self);
    auto gx = t.grad_buffer(x);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < len; ++j) gx[i * len + j] += g[i] * inv;
    }
  });
}

// Element i of a tensor as a scalar.
inline Var select(Tape& tape, Var x, std::size_t index) {
  const Tensor& xv = tape.value(x);
  if (index >= xv.size()) fail(ErrorKind::shape, "select index out of range");
  return tape.record(Tensor::scalar(xv[index]), {x}, [x, index](Tape& t, std::size_t self) {
    if (!t.requires_grad(x)) return;
    t.grad_buffer(x)[index] += t.out_grad(self)[0];
  });
}

// Scalars -> vector.
inline Var stack(Tape& tape, const std::vector<Var>& parts) {
  Tensor y({parts.size()});
  for (std::size_t i = 0; i < parts.size(); ++i) y[i] = tape.value(parts[i]).item();
  return tape.record(std::move(y), std::span<const Var>(parts), [parts](Tape& t, std::size_t self) {
    const auto g = t.out_grad(self);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (t.requires_grad(parts[i])) t.grad_buffer(parts[i])[0] += g[i];
    }
  });
}

// Mean binary cross-entropy over elements, from logits. Uses
// max(z,0) - z*y + log1p(exp(-|z|)), stable for large |z|.
inline Var bce_with_logits(Tape& tape, Var logits, const Tensor& targets) {
  const Tensor& z = tape.value(logits);
  detail::require_same_shape(z, targets, "bce_with_logits");
  for (double y : targets.data()) {
    if (y != 0.0 && y != 1.0) {
      fail(ErrorKind::data, "bce_with_logits: target " + std::to_string(y) + " is not 0 or 1");
    }
  }
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  return tape.record(Tensor::scalar(total / static_cast<double>(n)), {logits},
                     [logits, targets, n](Tape& t, std::size_t self) {
                       if (!t.requires_grad(logits)) return;
                       const double g = t.out_grad(self)[0] / static_cast<double>(n);
                       const Tensor& zv = t.value(logits);
                       auto gz = t.grad_buffer(logits);
                       for (std::size_t i = 0; i < n; ++i) {
                         gz[i] += g * (sigmoid_value(zv[i]) - targets[i]);
                       }
                     });
}

}  // namespace ad
}  // namespace stenograph
