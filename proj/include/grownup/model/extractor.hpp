#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "grownup/graph/page_graph.hpp"
#include "grownup/model/layers.hpp"

namespace grownup::model {

struct ModelConfig {
  std::size_t S = 5;
  std::size_t T = 5;
  std::size_t K = 256;
  std::size_t N_h = 4;
  double dropout = 0.1;
  std::size_t input_width = graph::kFeatureWidth;

  /// Throws InvalidConfig.
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

/// Trainable parameter count for a config, from the layer shapes alone.
std::size_t param_count(const ModelConfig& config);

/// Extractor input: the dense feature matrix plus the three edge lists.
template <typename Real>
struct GraphInput {
  Tensor<Real> features;  // [N, input_width]
  EdgeSet edges;

  static GraphInput from_graph(const graph::PageGraph& g);
};

EdgeSet edge_set(const graph::PageGraph& g);

template <typename Real>
struct ExtractorOutput {
  Tensor<Real> node_features;               // [N, K]
  std::optional<Tensor<Real>> cls_feature;  // [1, K], present iff T >= 1

  /// CLS row when present, otherwise the mean over node rows.
  Tensor<Real> graph_feature() const;
};

enum class Mode { Train, Eval };

/// Graph-level feature: mean over node rows or the CLS row.
enum class Readout { Mean, Cls };

/// Input LinearOnly block, S stages of (GraphConv block, LinearOnly block,
/// shared LSTM), then T Transformer blocks over the nodes plus a CLS row.
template <typename Real>
class Extractor {
 public:
  Extractor(const ModelConfig& config, std::uint64_t seed);

  Extractor(const Extractor&) = delete;
  Extractor& operator=(const Extractor&) = delete;
  Extractor(Extractor&&) = default;
  Extractor& operator=(Extractor&&) = default;

  /// rng supplies dropout masks in Train mode and is untouched in Eval.
  ExtractorOutput<Real> forward(const GraphInput<Real>& input, Mode mode, Rng& rng) const;
  ExtractorOutput<Real> forward_eval(const GraphInput<Real>& input) const;

  /// Output of one stage for a given [N, K] input and LSTM state; exposed for
  /// gradient checks.
  std::pair<Tensor<Real>, LstmState<Real>> stage(std::size_t s, const Tensor<Real>& x, const LstmState<Real>& state,
                                                 const EdgeSet& edges, Mode mode, Rng& rng) const;

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore<Real>& parameters() { return store_; }
  const nn::ParameterStore<Real>& parameters() const { return store_; }

 private:
  ModelConfig config_;
  nn::ParameterStore<Real> store_;
  LinearBlock<Real> input_;
  std::vector<GraphConvBlock<Real>> graph_blocks_;
  std::vector<LinearBlock<Real>> linear_blocks_;
  LstmWeights<Real> lstm_;
  std::vector<TransformerWeights<Real>> transformers_;
  std::optional<Tensor<Real>> cls_;
};

extern template class Extractor<float>;
extern template class Extractor<double>;

}  // namespace grownup::model
