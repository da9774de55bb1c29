#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grownup/nn/parameters.hpp"
#include "grownup/nn/tensor.hpp"

namespace grownup::nn {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // 0 gives plain Adam
};

/// Serializable optimizer state: moments keyed by parameter name.
struct OptimizerState {
  AdamWOptions options;
  std::uint64_t step = 0;
  ParamMap first_moment;
  ParamMap second_moment;
};

/// Adam with decoupled weight decay: the decay multiplies the parameter
/// (p <- p * (1 - lr * wd)) before the bias-corrected Adam update.
template <typename Real>
class AdamW {
 public:
  using Named = std::pair<std::string, Tensor<Real>>;

  AdamW(std::vector<Named> params, AdamWOptions options);

  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  std::uint64_t steps() const { return step_; }
  const AdamWOptions& options() const { return options_; }

  OptimizerState state() const;
  void load_state(const OptimizerState& state);

 private:
  std::vector<Named> params_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  AdamWOptions options_;
  std::uint64_t step_ = 0;
};

/// Parameters of several stores flattened into one optimizer parameter list.
template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>>> collect_parameters(
    std::initializer_list<const ParameterStore<Real>*> stores);

/// SGDR cosine schedule with warm restarts. `epoch` may be fractional.
/// Cycle i lasts t0 * mult^i epochs; within a cycle the rate decays from
/// base_lr to min_lr along half a cosine period.
double cosine_warm_restart_lr(double epoch, double base_lr, double t0, double mult,
                              double min_lr = 0.0);

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace grownup::nn
