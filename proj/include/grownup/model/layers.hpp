#pragma once

// Component layers of the extractor. Every layer is a plain weight struct
// plus a free function so tests can drive single layers directly.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grownup/nn/ops.hpp"
#include "grownup/nn/parameters.hpp"

namespace grownup::model {

using nn::Rng;
using nn::Tensor;

/// Edge list of one type: message flows from dst into src, i.e. node src
/// aggregates over all dst with A[src][dst] = 1.
struct EdgeIndex {
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
};
using EdgeSet = std::array<EdgeIndex, 3>;  // parent, child, self

template <typename Real>
struct Linear {
  Tensor<Real> W;                   // [in, out]
  std::optional<Tensor<Real>> b;    // [out]

  static Linear make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in,
                     std::size_t out, Rng& rng, bool bias = true);
  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

template <typename Real>
struct LayerNorm {
  Tensor<Real> gain;
  Tensor<Real> offset;

  static LayerNorm make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t width);
  Tensor<Real> operator()(const Tensor<Real>& x) const { return nn::layer_norm(x, gain, offset); }
};

/// One parameter set (W, b, B, C) per edge type.
template <typename Real>
struct GraphConvGatedWeights {
  std::array<Tensor<Real>, 3> W, b, B, C;

  static GraphConvGatedWeights make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in,
                                    std::size_t out, Rng& rng);
};

/// out_i = sum_k sum_{j in N_k(i)} sigmoid(x_i B_k + x_j C_k) * (x_j W_k + b_k).
/// No degree normalization.
template <typename Real>
Tensor<Real> graph_conv_gated(const Tensor<Real>& x, const EdgeSet& edges, const GraphConvGatedWeights<Real>& w);

template <typename Real>
struct LstmWeights {
  Tensor<Real> W_ih;  // [K, 4K], gate order input, forget, cell, output
  Tensor<Real> W_hh;  // [K, 4K]
  Tensor<Real> b;     // [4K]

  static LstmWeights make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t width, Rng& rng);
};

template <typename Real>
struct LstmState {
  Tensor<Real> h;
  Tensor<Real> c;
  static LstmState zeros(std::size_t n, std::size_t width);
};

/// One LSTM step applied independently per node row.
template <typename Real>
LstmState<Real> lstm_step(const Tensor<Real>& x, const LstmState<Real>& state, const LstmWeights<Real>& w);

template <typename Real>
struct AttentionWeights {
  std::vector<Tensor<Real>> Wq, Wk, Wv;  // per head, [K_in, K / N_h]

  static AttentionWeights make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in,
                               std::size_t width, std::size_t heads, Rng& rng);
};

/// concat_i softmax(H Wq_i (H Wk_i)^T / sqrt(K_in)) H Wv_i over all rows,
/// without masking. The divisor is the input width, not the head width.
template <typename Real>
Tensor<Real> multihead_attention(const Tensor<Real>& h, const AttentionWeights<Real>& w);

/// Pre-norm block: H += proj(MHA(LN1(H))); H += FFN(LN2(H)); FFN K->4K->K
/// with ReLU.
template <typename Real>
struct TransformerWeights {
  LayerNorm<Real> ln1, ln2;
  AttentionWeights<Real> attention;
  Linear<Real> out, ff1, ff2;

  static TransformerWeights make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t width,
                                 std::size_t heads, Rng& rng);
};

template <typename Real>
Tensor<Real> transformer_block(const Tensor<Real>& h, const TransformerWeights<Real>& w);

/// GraphConvGated -> LayerNorm -> ReLU -> GraphConvGated -> LayerNorm, plus
/// the input (identity skip), then ReLU.
template <typename Real>
struct GraphConvBlock {
  GraphConvGatedWeights<Real> conv1, conv2;
  LayerNorm<Real> norm1, norm2;

  static GraphConvBlock make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t width, Rng& rng);
  Tensor<Real> operator()(const Tensor<Real>& x, const EdgeSet& edges) const;
};

/// Linear -> LayerNorm -> ReLU -> Linear -> LayerNorm, plus a skip (a
/// learned bias-free projection when widths differ), then ReLU.
template <typename Real>
struct LinearBlock {
  Linear<Real> lin1, lin2;
  LayerNorm<Real> norm1, norm2;
  std::optional<Linear<Real>> skip;

  static LinearBlock make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in, std::size_t out,
                          Rng& rng);
  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

}  // namespace grownup::model
