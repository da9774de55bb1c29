#include "grownup/nn/tensor.hpp"

#include <cstdlib>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "grownup/errors.hpp"

namespace grownup::nn {

namespace {

thread_local bool g_grad_enabled = true;

bool default_check_finite() {
  if (const char* env = std::getenv("GROWNUP_CHECK_FINITE")) return env[0] == '1';
#ifndef NDEBUG
  return true;
#else
  return false;
#endif
}

bool g_check_finite = default_check_finite();

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void set_check_finite(bool enabled) { g_check_finite = enabled; }
bool check_finite() { return g_check_finite; }

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : node_(std::make_shared<TapeNode<Real>>()) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeMismatch("tensor of shape " + shape_str(shape) + " given " +
                        std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  std::vector<Real> v(shape_numel(shape), Real(0));
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real value, bool requires_grad) {
  std::vector<Real> v(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<Real>{value}, requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from_node(std::shared_ptr<TapeNode<Real>> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  return ndim() >= 2 ? node_->shape[0] : 1;
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  if (ndim() == 0) return 1;
  return node_->shape.back();
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw ShapeMismatch("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename Real>
void backward(const Tensor<Real>& loss, bool retain_graph) {
  if (!loss.defined() || loss.numel() != 1) {
    throw NotScalarLoss("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  // Order holds owning pointers: releasing a node's inputs below must not
  // free nodes that still have to propagate.
  std::vector<std::shared_ptr<TapeNode<Real>>> order;
  std::unordered_set<TapeNode<Real>*> visited;
  std::vector<std::pair<std::shared_ptr<TapeNode<Real>>, std::size_t>> stack;
  stack.emplace_back(loss.node_ptr(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->inputs.size()) {
      auto child = top.first->inputs[top.second++];
      if (child->requires_grad && !visited.count(child.get())) {
        visited.insert(child.get());
        stack.emplace_back(std::move(child), 0);
      }
    } else {
      order.push_back(std::move(top.first));
      stack.pop_back();
    }
  }

  TapeNode<Real>* root = loss.node();
  root->ensure_grad();
  root->grad[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TapeNode<Real>* node = it->get();
    if (node->propagate) node->propagate(*node);
    if (!retain_graph && !node->is_leaf) {
      node->propagate = nullptr;
      node->inputs.clear();
      if (node != root) {
        node->grad.clear();
        node->grad.shrink_to_fit();
      }
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&, bool);
template void backward<double>(const Tensor<double>&, bool);

}  // namespace grownup::nn
