#pragma once

// Randomized finite-difference cases for every tape primitive.

#include <functional>
#include <map>
#include <string>

#include "grownup/nn/ops.hpp"
#include "support/gradcheck.hpp"

namespace grownup::testing {

using namespace grownup::nn;

// Values with magnitude in [0.05, 1] so kinked ops stay away from their kinks.
inline DTensor away_from_zero(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.05, 1.0);
  return DTensor(std::move(shape), std::move(v), true);
}

// Projects an op output onto fixed random weights so every output entry
// contributes a distinct gradient.
inline DTensor project(const DTensor& y, const DTensor& w) { return sum(mul(y, w)); }

struct Primitive {
  // Builds inputs for a random shape and returns the loss closure.
  std::function<std::pair<std::function<DTensor()>, std::vector<DTensor>>(Rng&)> make;
};

inline std::map<std::string, Primitive> primitives() {
  std::map<std::string, Primitive> p;
  auto dims = [](Rng& rng) { return std::pair<std::size_t, std::size_t>{1 + rng.index(4), 1 + rng.index(5)}; };

  p["matmul"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    const std::size_t n = 1 + rng.index(4);
    auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng), w = random_tensor({m, n}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(matmul(a, b), w); }), std::vector{a, b}};
  }};
  p["transpose"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), w = random_tensor({k, m}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(transpose(a), w); }), std::vector{a}};
  }};
  p["add_sub_mul"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), b = random_tensor({m, k}, rng), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(mul(add(a, b), sub(a, b)), w); }),
                     std::vector{a, b}};
  }};
  p["add_bias_scale_offset"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), b = random_tensor({k}, rng), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>(
                         [=] { return project(add_scalar(scale(add_bias(a, b), 1.7), 0.3), w); }),
                     std::vector{a, b}};
  }};
  p["reductions"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), w0 = random_tensor({1, k}, rng), w1 = random_tensor({m, 1}, rng);
    return std::pair{std::function<DTensor()>([=] {
                       return add(add(project(sum(a, 0), w0), project(mean(a, 1), w1)),
                                  add(sum(a), scale(mean(a), 2.0)));
                     }),
                     std::vector{a}};
  }};
  p["sigmoid_tanh_exp"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng, 2.0), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(add(sigmoid(a), mul(tanh(a), exp(a))), w); }),
                     std::vector{a}};
  }};
  p["relu"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = away_from_zero({m, k}, rng), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(relu(a), w); }), std::vector{a}};
  }};
  p["log_clamp_acos"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    std::vector<double> pos(m * k), mid(m * k);
    for (auto& v : pos) v = rng.uniform(0.1, 3.0);
    for (auto& v : mid) v = rng.uniform(-0.9, 0.9);
    DTensor a({m, k}, pos, true), c({m, k}, mid, true);
    auto w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] {
                       return project(add(log_clamped(a, 1e-12), mul(clamp(c, -0.95, 0.95), acos_clamped(c, 1e-7))), w);
                     }),
                     std::vector{a, c}};
  }};
  p["softmax_log_softmax"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng, 3.0), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(add(softmax_rows(a), log_softmax_rows(a)), w); }),
                     std::vector{a}};
  }};
  p["l2_normalize"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = away_from_zero({m, k}, rng), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(l2_normalize_rows(a), w); }), std::vector{a}};
  }};
  p["layer_norm"] = {[](Rng& rng) {
    const std::size_t m = 1 + rng.index(4), k = 2 + rng.index(5);
    auto a = random_tensor({m, k}, rng, 2.0), g = random_tensor({k}, rng), o = random_tensor({k}, rng);
    auto w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] { return project(layer_norm(a, g, o), w); }),
                     std::vector{a, g, o}};
  }};
  p["dropout"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), w = random_tensor({m, k}, rng);
    Rng mask_rng = rng.split();
    return std::pair{std::function<DTensor()>([=] {
                       Rng r = mask_rng;  // same mask on every evaluation
                       return project(dropout(a, 0.4, r), w);
                     }),
                     std::vector{a}};
  }};
  p["reshape_concat_slice"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    auto a = random_tensor({m, k}, rng), b = random_tensor({m, k}, rng);
    auto w = random_tensor({2 * m, k}, rng), w2 = random_tensor({m, 2 * k}, rng);
    return std::pair{std::function<DTensor()>([=] {
                       auto r = concat_rows<double>({a, b});
                       auto c = concat_cols<double>({a, reshape(b, Shape{m, k})});
                       auto s = concat_rows<double>({slice_rows(r, 0, m), slice_rows(r, m, 2 * m)});
                       auto s2 = concat_cols<double>({slice_cols(c, 0, k), slice_cols(c, k, 2 * k)});
                       return add(project(s, w), project(s2, w2));
                     }),
                     std::vector{a, b}};
  }};
  p["gather_scatter"] = {[dims](Rng& rng) {
    auto [m, k] = dims(rng);
    const std::size_t e = 1 + rng.index(8);
    std::vector<std::uint32_t> src(e), dst(e);
    for (std::size_t i = 0; i < e; ++i) {
      src[i] = static_cast<std::uint32_t>(rng.index(m));
      dst[i] = static_cast<std::uint32_t>(rng.index(m));
    }
    auto a = random_tensor({m, k}, rng), w = random_tensor({m, k}, rng);
    return std::pair{std::function<DTensor()>([=] {
                       return project(scatter_add_rows(gather_rows(a, src), dst, m), w);
                     }),
                     std::vector{a}};
  }};
  return p;
}


}  // namespace grownup::testing
