#include "grownup/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grownup/errors.hpp"

namespace grownup::nn {

namespace {

template <typename Real>
using NodePtr = std::shared_ptr<TapeNode<Real>>;

template <typename Real>
using Propagate = std::function<void(TapeNode<Real>&)>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                      shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const Shape& a) {
  throw ShapeMismatch(std::string(op) + ": unsupported shape " + shape_str(a));
}

void require_2d(const char* op, const Shape& s) {
  if (s.size() != 2) shape_error(op, s);
}

template <typename Real>
void scan_finite(const char* op, const std::vector<Real>& v) {
  for (Real x : v) {
    if (!std::isfinite(x)) throw NonFinite(std::string(op) + " produced a non-finite value");
  }
}

// Builds the result node and wires it into the tape when any input needs
// gradients and recording is enabled.
template <typename Real>
Tensor<Real> make_result(const char* op, Shape shape, std::vector<Real> value,
                         std::vector<NodePtr<Real>> inputs, Propagate<Real> propagate) {
  if (check_finite()) scan_finite(op, value);
  auto node = std::make_shared<TapeNode<Real>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) track = track || in->requires_grad;
  }
  if (track) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->inputs = std::move(inputs);
    node->propagate = std::move(propagate);
  }
  return Tensor<Real>::from_node(std::move(node));
}

// C[m,n] += A[m,k] * B[k,n]
template <typename Real>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,k] += A[m,n] * B[k,n]^T
template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real* brow = b + p * n;
      Real s = 0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      c[i * k + p] += s;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename Real>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      Real* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real, typename Fwd, typename Deriv>
Tensor<Real> unary(const char* op, const Tensor<Real>& x, Fwd fwd, Deriv deriv) {
  std::vector<Real> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return make_result<Real>(op, x.shape(), std::move(out), {x.node_ptr()},
                           [deriv](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < self.value.size(); ++i) {
                               in.grad[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
                             }
                           });
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_error("matmul", a.shape(), b.shape());
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<Real> out(m * n, Real(0));
  gemm_nn(m, k, n, a.values().data(), b.values().data(), out.data());
  return make_result<Real>("matmul", Shape{m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
                           [m, k, n](TapeNode<Real>& self) {
                             auto& an = *self.inputs[0];
                             auto& bn = *self.inputs[1];
                             if (an.requires_grad) {
                               an.ensure_grad();
                               gemm_nt(m, n, k, self.grad.data(), bn.value.data(), an.grad.data());
                             }
                             if (bn.requires_grad) {
                               bn.ensure_grad();
                               gemm_tn(m, k, n, an.value.data(), self.grad.data(), bn.grad.data());
                             }
                           });
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  require_2d("transpose", a.shape());
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<Real> out(r * c);
  auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  return make_result<Real>("transpose", Shape{c, r}, std::move(out), {a.node_ptr()},
                           [r, c](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[i * c + j] += self.grad[j * r + i];
                           });
}

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::vector<Real> out(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result<Real>("add", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TapeNode<Real>& self) {
                             for (auto& in : self.inputs) {
                               if (!in->requires_grad) continue;
                               in->ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 in->grad[i] += self.grad[i];
                             }
                           });
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  std::vector<Real> out(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result<Real>("sub", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TapeNode<Real>& self) {
                             auto& an = *self.inputs[0];
                             auto& bn = *self.inputs[1];
                             if (an.requires_grad) {
                               an.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 an.grad[i] += self.grad[i];
                             }
                             if (bn.requires_grad) {
                               bn.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 bn.grad[i] -= self.grad[i];
                             }
                           });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<Real> out(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result<Real>("mul", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TapeNode<Real>& self) {
                             auto& an = *self.inputs[0];
                             auto& bn = *self.inputs[1];
                             if (an.requires_grad) {
                               an.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 an.grad[i] += self.grad[i] * bn.value[i];
                             }
                             if (bn.requires_grad) {
                               bn.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 bn.grad[i] += self.grad[i] * an.value[i];
                             }
                           });
}

template <typename Real>
Tensor<Real> add_bias(const Tensor<Real>& x, const Tensor<Real>& b) {
  if (x.ndim() != 2 || b.numel() != x.shape()[1]) shape_error("add_bias", x.shape(), b.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<Real> out(x.values().begin(), x.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return make_result<Real>("add_bias", x.shape(), std::move(out), {x.node_ptr(), b.node_ptr()},
                           [r, c](TapeNode<Real>& self) {
                             auto& xn = *self.inputs[0];
                             auto& bn = *self.inputs[1];
                             if (xn.requires_grad) {
                               xn.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 xn.grad[i] += self.grad[i];
                             }
                             if (bn.requires_grad) {
                               bn.ensure_grad();
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j)
                                   bn.grad[j] += self.grad[i * c + j];
                             }
                           });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor) {
  return unary<Real>(
      "scale", x, [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& x, Real offset) {
  return unary<Real>(
      "add_scalar", x, [offset](Real v) { return v + offset; }, [](Real, Real) { return Real(1); });
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  Real s = 0;
  for (Real v : x.values()) s += v;
  return make_result<Real>("sum", Shape{1}, std::vector<Real>{s}, {x.node_ptr()},
                           [](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (auto& g : in.grad) g += self.grad[0];
                           });
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& x) {
  if (x.numel() == 0) shape_error("mean", x.shape());
  return scale(sum(x), Real(1) / static_cast<Real>(x.numel()));
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x, int axis) {
  require_2d("sum(axis)", x.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  auto v = x.values();
  if (axis == 0) {
    std::vector<Real> out(c, Real(0));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[j] += v[i * c + j];
    return make_result<Real>("sum(axis=0)", Shape{1, c}, std::move(out), {x.node_ptr()},
                             [r, c](TapeNode<Real>& self) {
                               auto& in = *self.inputs[0];
                               in.ensure_grad();
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j)
                                   in.grad[i * c + j] += self.grad[j];
                             });
  }
  if (axis == 1) {
    std::vector<Real> out(r, Real(0));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[i] += v[i * c + j];
    return make_result<Real>("sum(axis=1)", Shape{r, 1}, std::move(out), {x.node_ptr()},
                             [r, c](TapeNode<Real>& self) {
                               auto& in = *self.inputs[0];
                               in.ensure_grad();
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j)
                                   in.grad[i * c + j] += self.grad[i];
                             });
  }
  throw ShapeMismatch("sum: axis must be 0 or 1");
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& x, int axis) {
  require_2d("mean(axis)", x.shape());
  const std::size_t count = axis == 0 ? x.shape()[0] : x.shape()[1];
  if (count == 0) shape_error("mean(axis)", x.shape());
  return scale(sum(x, axis), Real(1) / static_cast<Real>(count));
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& x) {
  return unary<Real>(
      "sigmoid", x,
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Tensor<Real> tanh(const Tensor<Real>& x) {
  return unary<Real>(
      "tanh", x, [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
Tensor<Real> relu(const Tensor<Real>& x) {
  return unary<Real>(
      "relu", x, [](Real v) { return v > Real(0) ? v : Real(0); },
      [](Real v, Real) { return v > Real(0) ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> exp(const Tensor<Real>& x) {
  return unary<Real>(
      "exp", x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

template <typename Real>
Tensor<Real> log_clamped(const Tensor<Real>& x, Real floor) {
  return unary<Real>(
      "log_clamped", x, [floor](Real v) { return std::log(std::max(v, floor)); },
      [floor](Real v, Real) { return v > floor ? Real(1) / v : Real(0); });
}

template <typename Real>
Tensor<Real> clamp(const Tensor<Real>& x, Real lo, Real hi) {
  return unary<Real>(
      "clamp", x, [lo, hi](Real v) { return std::clamp(v, lo, hi); },
      [lo, hi](Real v, Real) { return (v > lo && v < hi) ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> acos_clamped(const Tensor<Real>& x, Real eps) {
  const Real lo = Real(-1) + eps, hi = Real(1) - eps;
  return unary<Real>(
      "acos_clamped", x, [lo, hi](Real v) { return std::acos(std::clamp(v, lo, hi)); },
      [lo, hi](Real v, Real) {
        if (!(v > lo && v < hi)) return Real(0);
        return Real(-1) / std::sqrt(Real(1) - v * v);
      });
}

template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& x) {
  if (x.ndim() != 1 && x.ndim() != 2) shape_error("softmax_rows", x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  auto v = x.values();
  std::vector<Real> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = v.data() + i * c;
    Real mx = *std::max_element(row, row + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(row[j] - mx);
      z += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return make_result<Real>("softmax_rows", x.shape(), std::move(out), {x.node_ptr()},
                           [r, c](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i) {
                               const Real* y = self.value.data() + i * c;
                               const Real* g = self.grad.data() + i * c;
                               Real dot = 0;
                               for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[i * c + j] += y[j] * (g[j] - dot);
                             }
                           });
}

template <typename Real>
Tensor<Real> log_softmax_rows(const Tensor<Real>& x) {
  if (x.ndim() != 1 && x.ndim() != 2) shape_error("log_softmax_rows", x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  auto v = x.values();
  std::vector<Real> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = v.data() + i * c;
    Real mx = *std::max_element(row, row + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const Real lz = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lz;
  }
  return make_result<Real>("log_softmax_rows", x.shape(), std::move(out), {x.node_ptr()},
                           [r, c](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i) {
                               const Real* y = self.value.data() + i * c;
                               const Real* g = self.grad.data() + i * c;
                               Real gs = 0;
                               for (std::size_t j = 0; j < c; ++j) gs += g[j];
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[i * c + j] += g[j] - std::exp(y[j]) * gs;
                             }
                           });
}

template <typename Real>
Tensor<Real> l2_normalize_rows(const Tensor<Real>& x, Real eps) {
  if (x.ndim() != 1 && x.ndim() != 2) shape_error("l2_normalize_rows", x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  auto v = x.values();
  std::vector<Real> out(r * c, Real(0));
  std::vector<Real> norms(r, Real(0));
  for (std::size_t i = 0; i < r; ++i) {
    Real s = 0;
    for (std::size_t j = 0; j < c; ++j) s += v[i * c + j] * v[i * c + j];
    norms[i] = std::sqrt(s);
    if (norms[i] > eps) {
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] = v[i * c + j] / norms[i];
    }
  }
  return make_result<Real>("l2_normalize_rows", x.shape(), std::move(out), {x.node_ptr()},
                           [r, c, eps, norms = std::move(norms)](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i) {
                               if (norms[i] <= eps) continue;
                               const Real* y = self.value.data() + i * c;
                               const Real* g = self.grad.data() + i * c;
                               Real dot = 0;
                               for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[i * c + j] += (g[j] - y[j] * dot) / norms[i];
                             }
                           });
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& offset,
                        Real eps) {
  require_2d("layer_norm", x.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  if (gain.numel() != c || offset.numel() != c) shape_error("layer_norm", x.shape(), gain.shape());
  auto v = x.values();
  auto gv = gain.values();
  auto ov = offset.values();
  std::vector<Real> out(r * c);
  std::vector<Real> xhat(r * c);
  std::vector<Real> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const Real* row = v.data() + i * c;
    Real mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<Real>(c);
    Real var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(c);
    inv_std[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gv[j] + ov[j];
    }
  }
  return make_result<Real>(
      "layer_norm", x.shape(), std::move(out), {x.node_ptr(), gain.node_ptr(), offset.node_ptr()},
      [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](TapeNode<Real>& self) {
        auto& xn = *self.inputs[0];
        auto& gn = *self.inputs[1];
        auto& on = *self.inputs[2];
        if (gn.requires_grad) {
          gn.ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gn.grad[j] += self.grad[i * c + j] * xhat[i * c + j];
        }
        if (on.requires_grad) {
          on.ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) on.grad[j] += self.grad[i * c + j];
        }
        if (xn.requires_grad) {
          xn.ensure_grad();
          const Real inv_c = Real(1) / static_cast<Real>(c);
          for (std::size_t i = 0; i < r; ++i) {
            Real sum_g = 0, sum_gx = 0;
            for (std::size_t j = 0; j < c; ++j) {
              const Real gh = self.grad[i * c + j] * gn.value[j];
              sum_g += gh;
              sum_gx += gh * xhat[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
              const Real gh = self.grad[i * c + j] * gn.value[j];
              xn.grad[i * c + j] +=
                  inv_std[i] * (gh - inv_c * sum_g - xhat[i * c + j] * inv_c * sum_gx);
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& x, double drop_prob, Rng& rng) {
  if (drop_prob <= 0.0) return x;
  if (drop_prob >= 1.0) throw InvalidConfig("dropout probability must be < 1");
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - drop_prob));
  std::vector<Real> mask(x.numel());
  for (auto& m : mask) m = rng.bernoulli(drop_prob) ? Real(0) : keep_scale;
  std::vector<Real> out(x.numel());
  auto v = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] * mask[i];
  return make_result<Real>("dropout", x.shape(), std::move(out), {x.node_ptr()},
                           [mask = std::move(mask)](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < mask.size(); ++i)
                               in.grad[i] += self.grad[i] * mask[i];
                           });
}

template <typename Real>
Tensor<Real> one_hot(std::span<const std::size_t> indices, std::size_t classes) {
  std::vector<Real> out(indices.size() * classes, Real(0));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= classes) {
      throw ShapeMismatch("one_hot: index " + std::to_string(indices[i]) + " out of " +
                          std::to_string(classes) + " classes");
    }
    out[i * classes + indices[i]] = Real(1);
  }
  return Tensor<Real>(Shape{indices.size(), classes}, std::move(out), false);
}

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  std::vector<Real> out(x.values().begin(), x.values().end());
  return make_result<Real>("reshape", std::move(shape), std::move(out), {x.node_ptr()},
                           [](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               in.grad[i] += self.grad[i];
                           });
}

template <typename Real>
Tensor<Real> concat_rows(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != c || p.ndim() > 2) shape_error("concat_rows", parts[0].shape(), p.shape());
    total += p.rows();
  }
  std::vector<Real> out;
  out.reserve(total * c);
  std::vector<NodePtr<Real>> inputs;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
    inputs.push_back(p.node_ptr());
  }
  return make_result<Real>("concat_rows", Shape{total, c}, std::move(out), std::move(inputs),
                           [offsets = std::move(offsets)](TapeNode<Real>& self) {
                             for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                               auto& in = *self.inputs[k];
                               if (!in.requires_grad) continue;
                               in.ensure_grad();
                               for (std::size_t i = 0; i < in.grad.size(); ++i)
                                 in.grad[i] += self.grad[offsets[k] + i];
                             }
                           });
}

template <typename Real>
Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths, offsets;
  std::vector<NodePtr<Real>> inputs;
  for (const auto& p : parts) {
    if (p.rows() != r || p.ndim() > 2) shape_error("concat_cols", parts[0].shape(), p.shape());
    offsets.push_back(total);
    widths.push_back(p.cols());
    total += p.cols();
    inputs.push_back(p.node_ptr());
  }
  std::vector<Real> out(r * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + offsets[k]);
  }
  return make_result<Real>(
      "concat_cols", Shape{r, total}, std::move(out), std::move(inputs),
      [r, total, widths = std::move(widths), offsets = std::move(offsets)](TapeNode<Real>& self) {
        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
          auto& in = *self.inputs[k];
          if (!in.requires_grad) continue;
          in.ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < widths[k]; ++j)
              in.grad[i * widths[k] + j] += self.grad[i * total + offsets[k] + j];
        }
      });
}

template <typename Real>
Tensor<Real> slice_rows(const Tensor<Real>& x, std::size_t begin, std::size_t end) {
  require_2d("slice_rows", x.shape());
  const std::size_t c = x.shape()[1];
  if (begin > end || end > x.shape()[0]) shape_error("slice_rows", x.shape());
  auto v = x.values();
  std::vector<Real> out(v.begin() + begin * c, v.begin() + end * c);
  return make_result<Real>("slice_rows", Shape{end - begin, c}, std::move(out), {x.node_ptr()},
                           [begin, c](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               in.grad[begin * c + i] += self.grad[i];
                           });
}

template <typename Real>
Tensor<Real> slice_cols(const Tensor<Real>& x, std::size_t begin, std::size_t end) {
  require_2d("slice_cols", x.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  if (begin > end || end > c) shape_error("slice_cols", x.shape());
  const std::size_t w = end - begin;
  auto v = x.values();
  std::vector<Real> out(r * w);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * c + begin, w, out.data() + i * w);
  return make_result<Real>("slice_cols", Shape{r, w}, std::move(out), {x.node_ptr()},
                           [r, c, w, begin](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < w; ++j)
                                 in.grad[i * c + begin + j] += self.grad[i * w + j];
                           });
}

template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& x, std::span<const std::uint32_t> index) {
  require_2d("gather_rows", x.shape());
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  std::vector<Real> out(idx.size() * c);
  auto v = x.values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) throw ShapeMismatch("gather_rows: row index out of range");
    std::copy_n(v.data() + idx[r] * c, c, out.data() + r * c);
  }
  Shape shape{idx.size(), c};
  return make_result<Real>("gather_rows", std::move(shape), std::move(out), {x.node_ptr()},
                           [c, idx = std::move(idx)](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t r = 0; r < idx.size(); ++r)
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[idx[r] * c + j] += self.grad[r * c + j];
                           });
}

template <typename Real>
Tensor<Real> scatter_add_rows(const Tensor<Real>& x, std::span<const std::uint32_t> index,
                              std::size_t n_out) {
  require_2d("scatter_add_rows", x.shape());
  const std::size_t c = x.shape()[1];
  if (index.size() != x.shape()[0]) throw ShapeMismatch("scatter_add_rows: index/row count differ");
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  std::vector<Real> out(n_out * c, Real(0));
  auto v = x.values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n_out) throw ShapeMismatch("scatter_add_rows: target row out of range");
    for (std::size_t j = 0; j < c; ++j) out[idx[r] * c + j] += v[r * c + j];
  }
  return make_result<Real>("scatter_add_rows", Shape{n_out, c}, std::move(out), {x.node_ptr()},
                           [c, idx = std::move(idx)](TapeNode<Real>& self) {
                             auto& in = *self.inputs[0];
                             in.ensure_grad();
                             for (std::size_t r = 0; r < idx.size(); ++r)
                               for (std::size_t j = 0; j < c; ++j)
                                 in.grad[r * c + j] += self.grad[idx[r] * c + j];
                           });
}

#define GROWNUP_INSTANTIATE_OPS(R)                                                              \
  template Tensor<R> matmul(const Tensor<R>&, const Tensor<R>&);                               \
  template Tensor<R> transpose(const Tensor<R>&);                                              \
  template Tensor<R> add(const Tensor<R>&, const Tensor<R>&);                                  \
  template Tensor<R> sub(const Tensor<R>&, const Tensor<R>&);                                  \
  template Tensor<R> mul(const Tensor<R>&, const Tensor<R>&);                                  \
  template Tensor<R> add_bias(const Tensor<R>&, const Tensor<R>&);                             \
  template Tensor<R> scale(const Tensor<R>&, R);                                               \
  template Tensor<R> add_scalar(const Tensor<R>&, R);                                          \
  template Tensor<R> sum(const Tensor<R>&);                                                    \
  template Tensor<R> mean(const Tensor<R>&);                                                   \
  template Tensor<R> sum(const Tensor<R>&, int);                                               \
  template Tensor<R> mean(const Tensor<R>&, int);                                              \
  template Tensor<R> sigmoid(const Tensor<R>&);                                                \
  template Tensor<R> tanh(const Tensor<R>&);                                                   \
  template Tensor<R> relu(const Tensor<R>&);                                                   \
  template Tensor<R> exp(const Tensor<R>&);                                                    \
  template Tensor<R> log_clamped(const Tensor<R>&, R);                                         \
  template Tensor<R> clamp(const Tensor<R>&, R, R);                                            \
  template Tensor<R> acos_clamped(const Tensor<R>&, R);                                        \
  template Tensor<R> softmax_rows(const Tensor<R>&);                                           \
  template Tensor<R> log_softmax_rows(const Tensor<R>&);                                       \
  template Tensor<R> l2_normalize_rows(const Tensor<R>&, R);                                   \
  template Tensor<R> layer_norm(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&, R);      \
  template Tensor<R> dropout(const Tensor<R>&, double, Rng&);                                  \
  template Tensor<R> one_hot(std::span<const std::size_t>, std::size_t);                       \
  template Tensor<R> reshape(const Tensor<R>&, Shape);                                         \
  template Tensor<R> concat_rows(const std::vector<Tensor<R>>&);                               \
  template Tensor<R> concat_cols(const std::vector<Tensor<R>>&);                               \
  template Tensor<R> slice_rows(const Tensor<R>&, std::size_t, std::size_t);                   \
  template Tensor<R> slice_cols(const Tensor<R>&, std::size_t, std::size_t);                   \
  template Tensor<R> gather_rows(const Tensor<R>&, std::span<const std::uint32_t>);            \
  template Tensor<R> scatter_add_rows(const Tensor<R>&, std::span<const std::uint32_t>, std::size_t);

GROWNUP_INSTANTIATE_OPS(float)
GROWNUP_INSTANTIATE_OPS(double)

#undef GROWNUP_INSTANTIATE_OPS

}  // namespace grownup::nn
