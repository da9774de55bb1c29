#pragma once

#include <map>
#include <string>
#include <vector>

#include "grownup/nn/rng.hpp"
#include "grownup/nn/tensor.hpp"

namespace grownup::nn {

/// Raw parameter payload: what a checkpoint stores for one tensor.
struct ParamArray {
  Shape shape;
  std::vector<float> values;

  bool operator==(const ParamArray&) const = default;
};

using ParamMap = std::map<std::string, ParamArray>;

/// Ordered registry of trainable tensors keyed by dotted path.
///
/// Layers register their tensors here at construction and keep handles that
/// share storage with the registry, so loading values through the store
/// updates the layers in place.
template <typename Real>
class ParameterStore {
 public:
  Tensor<Real> add(const std::string& name, Shape shape, std::vector<Real> init);
  Tensor<Real> zeros(const std::string& name, Shape shape);
  Tensor<Real> ones(const std::string& name, Shape shape);
  /// Glorot-uniform init for a [fan_in, fan_out] matrix.
  Tensor<Real> glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor<Real> normal(const std::string& name, Shape shape, double stddev, Rng& rng);

  const std::vector<std::pair<std::string, Tensor<Real>>>& entries() const { return entries_; }
  std::size_t count() const;
  const Tensor<Real>& get(const std::string& name) const;

  void zero_grad();
  ParamMap export_values() const;
  /// Copies values in by name; shapes must match and every entry must exist.
  void import_values(const ParamMap& values, bool allow_missing = false);

 private:
  std::vector<std::pair<std::string, Tensor<Real>>> entries_;
  std::map<std::string, std::size_t> index_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace grownup::nn
