#pragma once

// Dense row-major tensors with a reverse-mode tape.
//
// Every op that touches a tensor requiring gradients records a TapeNode that
// links back to its inputs. backward() walks those links in reverse
// topological order. Leaves (parameters, inputs) keep their gradients across
// calls until zero_grad(); intermediate nodes are released after use unless
// the graph is retained.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace grownup::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename Real>
struct TapeNode {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TapeNode>> inputs;
  std::function<void(TapeNode&)> propagate;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  }
};

/// Whether ops currently record tape nodes (thread-local).
bool grad_enabled();

/// Disables tape recording for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// When enabled, every op result is scanned and NonFinite is thrown on
/// NaN/Inf. On by default in debug builds, or with GROWNUP_CHECK_FINITE=1.
void set_check_finite(bool enabled);
bool check_finite();

template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor from_node(std::shared_ptr<TapeNode<Real>> node);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  /// Rows of a 2-D tensor; 1 for a 1-D tensor.
  std::size_t rows() const;
  /// Columns of a 2-D tensor; length of a 1-D tensor.
  std::size_t cols() const;

  std::span<const Real> values() const { return node_->value; }
  std::span<Real> values_mut() { return node_->value; }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> grad_mut() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  Real item() const;
  Real at(std::size_t i) const { return node_->value[i]; }
  Real at(std::size_t row, std::size_t col) const { return node_->value[row * cols() + col]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  void zero_grad();

  /// Value copy detached from the tape.
  Tensor detach() const;

  TapeNode<Real>* node() const { return node_.get(); }
  const std::shared_ptr<TapeNode<Real>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<TapeNode<Real>> node_;
};

/// Runs reverse-mode differentiation from a scalar loss.
template <typename Real>
void backward(const Tensor<Real>& loss, bool retain_graph = false);

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> out(t.numel());
  auto v = t.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(v[i]);
  return Tensor<To>(t.shape(), std::move(out), false);
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace grownup::nn
