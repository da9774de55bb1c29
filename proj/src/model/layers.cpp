#include "grownup/model/layers.hpp"

#include <cmath>

#include "grownup/errors.hpp"

namespace grownup::model {

namespace {

constexpr const char* kEdgeNames[3] = {"parent", "child", "self"};

}  // namespace

template <typename Real>
Linear<Real> Linear<Real>::make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in,
                                std::size_t out, Rng& rng, bool bias) {
  Linear l{store.glorot(name + ".W", in, out, rng), std::nullopt};
  if (bias) l.b = store.zeros(name + ".b", {out});
  return l;
}

template <typename Real>
Tensor<Real> Linear<Real>::operator()(const Tensor<Real>& x) const {
  auto y = nn::matmul(x, W);
  return b ? nn::add_bias(y, *b) : y;
}

template <typename Real>
LayerNorm<Real> LayerNorm<Real>::make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t width) {
  return {store.ones(name + ".gain", {width}), store.zeros(name + ".offset", {width})};
}

template <typename Real>
GraphConvGatedWeights<Real> GraphConvGatedWeights<Real>::make(nn::ParameterStore<Real>& store,
                                                              const std::string& name, std::size_t in,
                                                              std::size_t out, Rng& rng) {
  GraphConvGatedWeights w;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string p = name + "." + kEdgeNames[k];
    w.W[k] = store.glorot(p + ".W", in, out, rng);
    w.b[k] = store.zeros(p + ".b", {out});
    w.B[k] = store.glorot(p + ".B", in, out, rng);
    w.C[k] = store.glorot(p + ".C", in, out, rng);
  }
  return w;
}

template <typename Real>
Tensor<Real> graph_conv_gated(const Tensor<Real>& x, const EdgeSet& edges, const GraphConvGatedWeights<Real>& w) {
  if (x.ndim() != 2 || x.cols() != w.W[0].rows()) {
    throw ShapeMismatch("graph_conv_gated: input " + nn::shape_str(x.shape()) + " vs weights " +
                        nn::shape_str(w.W[0].shape()));
  }
  const std::size_t n = x.rows();
  std::optional<Tensor<Real>> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& e = edges[k];
    if (e.src.size() != e.dst.size()) throw ShapeMismatch("graph_conv_gated: ragged edge list");
    if (e.src.empty()) continue;
    const auto msg = nn::add_bias(nn::matmul(x, w.W[k]), w.b[k]);
    const auto from_src = nn::matmul(x, w.B[k]);
    const auto from_dst = nn::matmul(x, w.C[k]);
    const auto gate = nn::sigmoid(nn::add(nn::gather_rows(from_src, e.src), nn::gather_rows(from_dst, e.dst)));
    const auto contrib = nn::scatter_add_rows(nn::mul(gate, nn::gather_rows(msg, e.dst)), e.src, n);
    out = out ? nn::add(*out, contrib) : contrib;
  }
  if (!out) return Tensor<Real>::zeros({n, w.W[0].cols()});
  return *out;
}

template <typename Real>
LstmWeights<Real> LstmWeights<Real>::make(nn::ParameterStore<Real>& store, const std::string& name,
                                          std::size_t width, Rng& rng) {
  LstmWeights w{store.glorot(name + ".W_ih", width, 4 * width, rng),
                store.glorot(name + ".W_hh", width, 4 * width, rng), Tensor<Real>()};
  // Forget gate bias starts at 1 so state passes through early in training.
  std::vector<Real> bias(4 * width, Real(0));
  for (std::size_t i = width; i < 2 * width; ++i) bias[i] = Real(1);
  w.b = store.add(name + ".b", {4 * width}, std::move(bias));
  return w;
}

template <typename Real>
LstmState<Real> LstmState<Real>::zeros(std::size_t n, std::size_t width) {
  return {Tensor<Real>::zeros({n, width}), Tensor<Real>::zeros({n, width})};
}

template <typename Real>
LstmState<Real> lstm_step(const Tensor<Real>& x, const LstmState<Real>& state, const LstmWeights<Real>& w) {
  const std::size_t k = w.W_ih.rows();
  if (x.ndim() != 2 || x.cols() != k || state.h.shape() != x.shape() || state.c.shape() != x.shape()) {
    throw ShapeMismatch("lstm_step: input " + nn::shape_str(x.shape()) + " state " +
                        nn::shape_str(state.h.shape()) + " width " + std::to_string(k));
  }
  const auto z = nn::add_bias(nn::add(nn::matmul(x, w.W_ih), nn::matmul(state.h, w.W_hh)), w.b);
  const auto i = nn::sigmoid(nn::slice_cols(z, 0, k));
  const auto f = nn::sigmoid(nn::slice_cols(z, k, 2 * k));
  const auto g = nn::tanh(nn::slice_cols(z, 2 * k, 3 * k));
  const auto o = nn::sigmoid(nn::slice_cols(z, 3 * k, 4 * k));
  const auto c = nn::add(nn::mul(f, state.c), nn::mul(i, g));
  return {nn::mul(o, nn::tanh(c)), c};
}

template <typename Real>
AttentionWeights<Real> AttentionWeights<Real>::make(nn::ParameterStore<Real>& store, const std::string& name,
                                                    std::size_t in, std::size_t width, std::size_t heads, Rng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw InvalidConfig("attention width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
                        " heads");
  }
  AttentionWeights w;
  const std::size_t hw = width / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string p = name + ".head" + std::to_string(h);
    w.Wq.push_back(store.glorot(p + ".Wq", in, hw, rng));
    w.Wk.push_back(store.glorot(p + ".Wk", in, hw, rng));
    w.Wv.push_back(store.glorot(p + ".Wv", in, hw, rng));
  }
  return w;
}

template <typename Real>
Tensor<Real> multihead_attention(const Tensor<Real>& h, const AttentionWeights<Real>& w) {
  if (h.ndim() != 2 || w.Wq.empty() || h.cols() != w.Wq[0].rows()) {
    throw ShapeMismatch("multihead_attention: input " + nn::shape_str(h.shape()));
  }
  const Real inv_scale = Real(1) / std::sqrt(static_cast<Real>(h.cols()));
  std::vector<Tensor<Real>> heads;
  heads.reserve(w.Wq.size());
  for (std::size_t i = 0; i < w.Wq.size(); ++i) {
    const auto q = nn::matmul(h, w.Wq[i]);
    const auto k = nn::matmul(h, w.Wk[i]);
    const auto v = nn::matmul(h, w.Wv[i]);
    const auto scores = nn::scale(nn::matmul(q, nn::transpose(k)), inv_scale);
    heads.push_back(nn::matmul(nn::softmax_rows(scores), v));
  }
  return heads.size() == 1 ? heads[0] : nn::concat_cols(heads);
}

template <typename Real>
TransformerWeights<Real> TransformerWeights<Real>::make(nn::ParameterStore<Real>& store, const std::string& name,
                                                        std::size_t width, std::size_t heads, Rng& rng) {
  TransformerWeights w{LayerNorm<Real>::make(store, name + ".ln1", width),
                       LayerNorm<Real>::make(store, name + ".ln2", width),
                       AttentionWeights<Real>::make(store, name + ".attn", width, width, heads, rng),
                       Linear<Real>::make(store, name + ".out", width, width, rng),
                       Linear<Real>::make(store, name + ".ff1", width, 4 * width, rng),
                       Linear<Real>::make(store, name + ".ff2", 4 * width, width, rng)};
  return w;
}

template <typename Real>
Tensor<Real> transformer_block(const Tensor<Real>& h, const TransformerWeights<Real>& w) {
  const auto attended = nn::add(h, w.out(multihead_attention(w.ln1(h), w.attention)));
  return nn::add(attended, w.ff2(nn::relu(w.ff1(w.ln2(attended)))));
}

template <typename Real>
GraphConvBlock<Real> GraphConvBlock<Real>::make(nn::ParameterStore<Real>& store, const std::string& name,
                                                std::size_t width, Rng& rng) {
  return {GraphConvGatedWeights<Real>::make(store, name + ".conv1", width, width, rng),
          GraphConvGatedWeights<Real>::make(store, name + ".conv2", width, width, rng),
          LayerNorm<Real>::make(store, name + ".norm1", width), LayerNorm<Real>::make(store, name + ".norm2", width)};
}

template <typename Real>
Tensor<Real> GraphConvBlock<Real>::operator()(const Tensor<Real>& x, const EdgeSet& edges) const {
  const auto y = nn::relu(norm1(graph_conv_gated(x, edges, conv1)));
  return nn::relu(nn::add(x, norm2(graph_conv_gated(y, edges, conv2))));
}

template <typename Real>
LinearBlock<Real> LinearBlock<Real>::make(nn::ParameterStore<Real>& store, const std::string& name, std::size_t in,
                                          std::size_t out, Rng& rng) {
  LinearBlock blk{Linear<Real>::make(store, name + ".lin1", in, out, rng),
                  Linear<Real>::make(store, name + ".lin2", out, out, rng),
                  LayerNorm<Real>::make(store, name + ".norm1", out), LayerNorm<Real>::make(store, name + ".norm2", out),
                  std::nullopt};
  if (in != out) blk.skip = Linear<Real>::make(store, name + ".skip", in, out, rng, false);
  return blk;
}

template <typename Real>
Tensor<Real> LinearBlock<Real>::operator()(const Tensor<Real>& x) const {
  const auto y = norm2(lin2(nn::relu(norm1(lin1(x)))));
  return nn::relu(nn::add(skip ? (*skip)(x) : x, y));
}

#define GROWNUP_INSTANTIATE_LAYERS(R)                                                                      \
  template struct Linear<R>;                                                                             \
  template struct LayerNorm<R>;                                                                          \
  template struct GraphConvGatedWeights<R>;                                                              \
  template struct LstmWeights<R>;                                                                        \
  template struct LstmState<R>;                                                                          \
  template struct AttentionWeights<R>;                                                                   \
  template struct TransformerWeights<R>;                                                                 \
  template struct GraphConvBlock<R>;                                                                     \
  template struct LinearBlock<R>;                                                                        \
  template Tensor<R> graph_conv_gated(const Tensor<R>&, const EdgeSet&, const GraphConvGatedWeights<R>&); \
  template LstmState<R> lstm_step(const Tensor<R>&, const LstmState<R>&, const LstmWeights<R>&);         \
  template Tensor<R> multihead_attention(const Tensor<R>&, const AttentionWeights<R>&);                 \
  template Tensor<R> transformer_block(const Tensor<R>&, const TransformerWeights<R>&);

GROWNUP_INSTANTIATE_LAYERS(float)
GROWNUP_INSTANTIATE_LAYERS(double)

}  // namespace grownup::model
