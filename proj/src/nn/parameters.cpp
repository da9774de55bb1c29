#include "grownup/nn/parameters.hpp"

#include <cmath>

#include "grownup/errors.hpp"

namespace grownup::nn {

template <typename Real>
Tensor<Real> ParameterStore<Real>::add(const std::string& name, Shape shape, std::vector<Real> init) {
  if (index_.count(name)) throw InvalidConfig("duplicate parameter name: " + name);
  Tensor<Real> t(std::move(shape), std::move(init), true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, t);
  return t;
}

template <typename Real>
Tensor<Real> ParameterStore<Real>::zeros(const std::string& name, Shape shape) {
  std::vector<Real> v(shape_numel(shape), Real(0));
  return add(name, std::move(shape), std::move(v));
}

template <typename Real>
Tensor<Real> ParameterStore<Real>::ones(const std::string& name, Shape shape) {
  std::vector<Real> v(shape_numel(shape), Real(1));
  return add(name, std::move(shape), std::move(v));
}

template <typename Real>
Tensor<Real> ParameterStore<Real>::glorot(const std::string& name, std::size_t fan_in,
                                          std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<Real> v(fan_in * fan_out);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-limit, limit));
  return add(name, Shape{fan_in, fan_out}, std::move(v));
}

template <typename Real>
Tensor<Real> ParameterStore<Real>::normal(const std::string& name, Shape shape, double stddev,
                                          Rng& rng) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(rng.normal() * stddev);
  return add(name, std::move(shape), std::move(v));
}

template <typename Real>
std::size_t ParameterStore<Real>::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

template <typename Real>
const Tensor<Real>& ParameterStore<Real>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidConfig("unknown parameter: " + name);
  return entries_[it->second].second;
}

template <typename Real>
void ParameterStore<Real>::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

template <typename Real>
ParamMap ParameterStore<Real>::export_values() const {
  ParamMap out;
  for (const auto& [name, t] : entries_) {
    ParamArray a;
    a.shape = t.shape();
    a.values.assign(t.values().begin(), t.values().end());
    out.emplace(name, std::move(a));
  }
  return out;
}

template <typename Real>
void ParameterStore<Real>::import_values(const ParamMap& values, bool allow_missing) {
  for (auto& [name, t] : entries_) {
    auto it = values.find(name);
    if (it == values.end()) {
      if (allow_missing) continue;
      throw CorruptRecord("checkpoint lacks parameter " + name);
    }
    if (it->second.shape != t.shape()) {
      throw ShapeMismatch("parameter " + name + " has shape " + shape_str(t.shape()) +
                          " but checkpoint stores " + shape_str(it->second.shape));
    }
    auto dst = t.values_mut();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(it->second.values[i]);
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace grownup::nn
