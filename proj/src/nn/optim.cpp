#include "grownup/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "grownup/errors.hpp"

namespace grownup::nn {

template <typename Real>
AdamW<Real>::AdamW(std::vector<Named> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& [name, t] : params_) {
    m_.emplace_back(t.numel(), Real(0));
    v_.emplace_back(t.numel(), Real(0));
  }
}

template <typename Real>
void AdamW<Real>::step() {
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = 1.0 - options_.lr * options_.weight_decay;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& t = params_[k].second;
    auto p = t.values_mut();
    const bool has_grad = t.has_grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = has_grad ? static_cast<double>(t.grad()[i]) : 0.0;
      const double m = b1 * static_cast<double>(m_[k][i]) + (1.0 - b1) * g;
      const double v = b2 * static_cast<double>(v_[k][i]) + (1.0 - b2) * g * g;
      m_[k][i] = static_cast<Real>(m);
      v_[k][i] = static_cast<Real>(v);
      const double mhat = m / bias1;
      const double vhat = v / bias2;
      double x = static_cast<double>(p[i]) * decay;
      x -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
      p[i] = static_cast<Real>(x);
    }
  }
}

template <typename Real>
void AdamW<Real>::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

template <typename Real>
OptimizerState AdamW<Real>::state() const {
  OptimizerState s;
  s.options = options_;
  s.step = step_;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& [name, t] = params_[k];
    ParamArray m{t.shape(), {}}, v{t.shape(), {}};
    m.values.assign(m_[k].begin(), m_[k].end());
    v.values.assign(v_[k].begin(), v_[k].end());
    s.first_moment.emplace(name, std::move(m));
    s.second_moment.emplace(name, std::move(v));
  }
  return s;
}

template <typename Real>
void AdamW<Real>::load_state(const OptimizerState& state) {
  options_ = state.options;
  step_ = state.step;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& name = params_[k].first;
    auto mi = state.first_moment.find(name);
    auto vi = state.second_moment.find(name);
    if (mi == state.first_moment.end() || vi == state.second_moment.end()) {
      throw CorruptRecord("optimizer state lacks moments for " + name);
    }
    if (mi->second.values.size() != m_[k].size() || vi->second.values.size() != v_[k].size()) {
      throw ShapeMismatch("optimizer moment size mismatch for " + name);
    }
    for (std::size_t i = 0; i < m_[k].size(); ++i) {
      m_[k][i] = static_cast<Real>(mi->second.values[i]);
      v_[k][i] = static_cast<Real>(vi->second.values[i]);
    }
  }
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>>> collect_parameters(
    std::initializer_list<const ParameterStore<Real>*> stores) {
  std::vector<std::pair<std::string, Tensor<Real>>> out;
  for (const auto* store : stores) {
    for (const auto& e : store->entries()) out.push_back(e);
  }
  return out;
}

double cosine_warm_restart_lr(double epoch, double base_lr, double t0, double mult,
                              double min_lr) {
  if (t0 < 1.0) throw InvalidConfig("cosine schedule needs t0 >= 1");
  if (mult < 1.0) throw InvalidConfig("cosine schedule needs mult >= 1");
  double t_i = t0;
  double t_cur = epoch;
  if (mult == 1.0) {
    t_cur = std::fmod(epoch, t0);
  } else {
    while (t_cur >= t_i) {
      t_cur -= t_i;
      t_i *= mult;
    }
  }
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * t_cur / t_i));
}

template class AdamW<float>;
template class AdamW<double>;
template std::vector<std::pair<std::string, Tensor<float>>> collect_parameters(
    std::initializer_list<const ParameterStore<float>*>);
template std::vector<std::pair<std::string, Tensor<double>>> collect_parameters(
    std::initializer_list<const ParameterStore<double>*>);

}  // namespace grownup::nn
