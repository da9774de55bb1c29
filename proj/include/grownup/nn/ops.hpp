#pragma once

// Differentiable primitives. All tensors are row-major; most ops take 2-D
// inputs ([rows, cols]). Biases and other per-column vectors are 1-D.
// Shape errors throw ShapeMismatch naming the offending shapes.

#include <cstdint>
#include <span>
#include <vector>

#include "grownup/nn/rng.hpp"
#include "grownup/nn/tensor.hpp"

namespace grownup::nn {

template <typename Real> Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real> Tensor<Real> transpose(const Tensor<Real>& a);

template <typename Real> Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real> Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real> Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);
/// x[N,K] + b[K] broadcast over rows.
template <typename Real> Tensor<Real> add_bias(const Tensor<Real>& x, const Tensor<Real>& b);
template <typename Real> Tensor<Real> scale(const Tensor<Real>& x, Real factor);
template <typename Real> Tensor<Real> add_scalar(const Tensor<Real>& x, Real offset);

/// Sum of all entries, shape [1].
template <typename Real> Tensor<Real> sum(const Tensor<Real>& x);
template <typename Real> Tensor<Real> mean(const Tensor<Real>& x);
/// axis 0 reduces rows to [1, K]; axis 1 reduces columns to [N, 1].
template <typename Real> Tensor<Real> sum(const Tensor<Real>& x, int axis);
template <typename Real> Tensor<Real> mean(const Tensor<Real>& x, int axis);

template <typename Real> Tensor<Real> sigmoid(const Tensor<Real>& x);
template <typename Real> Tensor<Real> tanh(const Tensor<Real>& x);
template <typename Real> Tensor<Real> relu(const Tensor<Real>& x);
template <typename Real> Tensor<Real> exp(const Tensor<Real>& x);
/// log(max(x, floor)); gradient is zero where the floor is active.
template <typename Real> Tensor<Real> log_clamped(const Tensor<Real>& x, Real floor);
/// Gradient passes only strictly inside (lo, hi).
template <typename Real> Tensor<Real> clamp(const Tensor<Real>& x, Real lo, Real hi);
/// acos(clamp(x, -1 + eps, 1 - eps)).
template <typename Real> Tensor<Real> acos_clamped(const Tensor<Real>& x, Real eps);

template <typename Real> Tensor<Real> softmax_rows(const Tensor<Real>& x);
template <typename Real> Tensor<Real> log_softmax_rows(const Tensor<Real>& x);
/// Rows scaled to unit L2 norm; rows with norm <= eps are returned as zeros.
template <typename Real> Tensor<Real> l2_normalize_rows(const Tensor<Real>& x, Real eps = Real(1e-12));
/// Row-wise layer normalization with per-column gain and offset.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& offset,
                        Real eps = Real(1e-5));

/// Inverted dropout: entries are zeroed with probability drop_prob and the
/// survivors scaled by 1 / (1 - drop_prob). drop_prob = 0 returns x itself.
template <typename Real> Tensor<Real> dropout(const Tensor<Real>& x, double drop_prob, Rng& rng);

/// Constant [indices.size(), classes] one-hot matrix.
template <typename Real> Tensor<Real> one_hot(std::span<const std::size_t> indices, std::size_t classes);

template <typename Real> Tensor<Real> reshape(const Tensor<Real>& x, Shape shape);
template <typename Real> Tensor<Real> concat_rows(const std::vector<Tensor<Real>>& parts);
template <typename Real> Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts);
template <typename Real> Tensor<Real> slice_rows(const Tensor<Real>& x, std::size_t begin, std::size_t end);
template <typename Real> Tensor<Real> slice_cols(const Tensor<Real>& x, std::size_t begin, std::size_t end);
/// out[r] = x[index[r]].
template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& x, std::span<const std::uint32_t> index);
/// out[index[r]] += x[r], out has n_out rows.
template <typename Real>
Tensor<Real> scatter_add_rows(const Tensor<Real>& x, std::span<const std::uint32_t> index, std::size_t n_out);

}  // namespace grownup::nn
