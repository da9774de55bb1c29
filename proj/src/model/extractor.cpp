#include "grownup/model/extractor.hpp"

#include "grownup/errors.hpp"
#include "json.hpp"

namespace grownup::model {

void ModelConfig::validate() const {
  if (S < 1) throw InvalidConfig("model.S must be >= 1");
  if (K < 1) throw InvalidConfig("model.K must be >= 1");
  if (N_h < 1 || K % N_h != 0) {
    throw InvalidConfig("model.K=" + std::to_string(K) + " not divisible by model.N_h=" + std::to_string(N_h));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("model.dropout must be in [0, 1)");
  if (input_width < 1) throw InvalidConfig("model.input_width must be >= 1");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j{{"S", S}, {"T", T}, {"K", K}, {"N_h", N_h}, {"dropout", dropout}, {"input_width", input_width}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.S = j.at("S").get<std::size_t>();
    c.T = j.at("T").get<std::size_t>();
    c.K = j.at("K").get<std::size_t>();
    c.N_h = j.at("N_h").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.input_width = j.value("input_width", graph::kFeatureWidth);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::size_t linear_params(std::size_t in, std::size_t out, bool bias = true) { return in * out + (bias ? out : 0); }

std::size_t linear_block_params(std::size_t in, std::size_t out) {
  return linear_params(in, out) + linear_params(out, out) + 4 * out + (in != out ? in * out : 0);
}

}  // namespace

std::size_t param_count(const ModelConfig& c) {
  const std::size_t k = c.K;
  const std::size_t gcg = 3 * (3 * k * k + k);
  const std::size_t graph_block = 2 * gcg + 4 * k;
  const std::size_t lstm = 2 * k * 4 * k + 4 * k;
  const std::size_t transformer =
      4 * k + 3 * k * k + linear_params(k, k) + linear_params(k, 4 * k) + linear_params(4 * k, k);
  return linear_block_params(c.input_width, k) + c.S * (graph_block + linear_block_params(k, k)) + lstm +
         c.T * transformer + (c.T > 0 ? k : 0);
}

EdgeSet edge_set(const graph::PageGraph& g) {
  EdgeSet out;
  for (std::size_t k = 0; k < graph::kEdgeTypes; ++k) {
    for (const auto& e : g.edges[k]) {
      out[k].src.push_back(e.src);
      out[k].dst.push_back(e.dst);
    }
  }
  return out;
}

template <typename Real>
GraphInput<Real> GraphInput<Real>::from_graph(const graph::PageGraph& g) {
  std::vector<Real> values(g.features.begin(), g.features.end());
  return {Tensor<Real>({g.n_nodes, graph::kFeatureWidth}, std::move(values)), edge_set(g)};
}

template <typename Real>
Tensor<Real> ExtractorOutput<Real>::graph_feature() const {
  return cls_feature ? *cls_feature : nn::mean(node_features, 0);
}

template <typename Real>
Extractor<Real>::Extractor(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t k = config_.K;
  input_ = LinearBlock<Real>::make(store_, "input", config_.input_width, k, rng);
  for (std::size_t s = 0; s < config_.S; ++s) {
    const std::string p = "stage" + std::to_string(s);
    graph_blocks_.push_back(GraphConvBlock<Real>::make(store_, p + ".graph", k, rng));
    linear_blocks_.push_back(LinearBlock<Real>::make(store_, p + ".linear", k, k, rng));
  }
  lstm_ = LstmWeights<Real>::make(store_, "lstm", k, rng);
  for (std::size_t t = 0; t < config_.T; ++t) {
    transformers_.push_back(TransformerWeights<Real>::make(store_, "tf" + std::to_string(t), k, config_.N_h, rng));
  }
  if (config_.T > 0) cls_ = store_.normal("cls", {1, k}, 0.02, rng);
}

template <typename Real>
std::pair<Tensor<Real>, LstmState<Real>> Extractor<Real>::stage(std::size_t s, const Tensor<Real>& x,
                                                                const LstmState<Real>& state, const EdgeSet& edges,
                                                                Mode mode, Rng& rng) const {
  const double p = mode == Mode::Train ? config_.dropout : 0.0;
  auto h = nn::dropout(graph_blocks_.at(s)(x, edges), p, rng);
  h = nn::dropout(linear_blocks_.at(s)(h), p, rng);
  auto next = lstm_step(h, state, lstm_);
  return {next.h, next};
}

template <typename Real>
ExtractorOutput<Real> Extractor<Real>::forward(const GraphInput<Real>& input, Mode mode, Rng& rng) const {
  const auto& x = input.features;
  if (x.ndim() != 2 || x.cols() != config_.input_width) {
    throw ShapeMismatch("extractor input " + nn::shape_str(x.shape()) + ", expected width " +
                        std::to_string(config_.input_width));
  }
  const std::size_t n = x.rows();
  for (const auto& e : input.edges) {
    for (auto v : e.src) if (v >= n) throw ShapeMismatch("edge endpoint out of range");
    for (auto v : e.dst) if (v >= n) throw ShapeMismatch("edge endpoint out of range");
  }
  const double p = mode == Mode::Train ? config_.dropout : 0.0;
  auto h = nn::dropout(input_(x), p, rng);
  auto state = LstmState<Real>::zeros(n, config_.K);
  for (std::size_t s = 0; s < config_.S; ++s) std::tie(h, state) = stage(s, h, state, input.edges, mode, rng);
  if (!cls_) return {h, std::nullopt};

  auto seq = nn::concat_rows<Real>({h, *cls_});
  for (const auto& tf : transformers_) seq = transformer_block(seq, tf);
  return {nn::slice_rows(seq, 0, n), nn::slice_rows(seq, n, n + 1)};
}

template <typename Real>
ExtractorOutput<Real> Extractor<Real>::forward_eval(const GraphInput<Real>& input) const {
  Rng unused(0);
  return forward(input, Mode::Eval, unused);
}

template struct GraphInput<float>;
template struct GraphInput<double>;
template struct ExtractorOutput<float>;
template struct ExtractorOutput<double>;
template class Extractor<float>;
template class Extractor<double>;

}  // namespace grownup::model
