#pragma once

// Node-level fine-tuning: content vs boilerplate for every text node.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grownup/eval/metrics.hpp"
#include "grownup/graph/page_graph.hpp"
#include "grownup/model/extractor.hpp"

namespace grownup::tasks {

using model::Tensor;
using nn::Rng;

/// Per-node labels from aligning a page with its gold text.
struct AlignedLabels {
  std::vector<std::uint32_t> nodes;  // text nodes with at least one token, pre-order
  std::vector<int> labels;           // 1 content, 0 boilerplate
};

/// Token-level LCS between the concatenated node tokens and the gold
/// tokens; a node is content iff more than half its tokens are matched.
/// Empty gold labels everything 0.
AlignedLabels align_ground_truth(const graph::PageGraph& page, std::string_view gold);

/// Visible tokens of a page: node texts in pre-order, tokenized.
std::vector<std::string> page_tokens(const graph::PageGraph& page);

template <typename Real>
struct BoilerplateHead {
  nn::ParameterStore<Real> store;
  model::Linear<Real> proj;  // K -> 1
  double threshold = 0.5;

  BoilerplateHead(std::size_t width, std::uint64_t seed);
  BoilerplateHead(const BoilerplateHead&) = delete;
  BoilerplateHead& operator=(const BoilerplateHead&) = delete;

  /// Sigmoid scores, [rows, 1].
  Tensor<Real> operator()(const Tensor<Real>& node_features) const;
};

/// Binary cross-entropy averaged over rows with targets smoothed to
/// y (1 - a) + a / 2.
template <typename Real>
Tensor<Real> smoothed_bce(const Tensor<Real>& scores, const std::vector<int>& labels, double smoothing);

/// Scores of the page's text nodes (has_text), in pre-order.
std::vector<std::pair<std::uint32_t, double>> text_node_scores(const graph::PageGraph& page,
                                                              const model::Extractor<float>& extractor,
                                                              const BoilerplateHead<float>& head);

/// Text of nodes scoring above the threshold, joined with single spaces.
std::string extract_text(const graph::PageGraph& page, const model::Extractor<float>& extractor,
                         const BoilerplateHead<float>& head);

struct BoilerplateExample {
  graph::PageGraph graph;
  std::string gold;
};

struct FinetuneOptions {
  std::size_t epochs = 40;
  std::size_t batch_nodes = 128;
  double lr = 0.002;
  double weight_decay = 1e-4;
  double label_smoothing = 0.01;
  double threshold = 0.5;
  bool track_train_f1 = false;
  std::uint64_t seed = 1;
};

struct FinetuneEpoch {
  std::size_t epoch = 0;
  double train_loss = 0;
  double dev_f1 = 0;
  std::optional<double> train_f1;
};

struct FinetuneResult {
  std::vector<FinetuneEpoch> log;
  std::size_t best_epoch = 0;
  double best_dev_f1 = -1;
  nn::ParamMap extractor;  // weights of the best epoch
  nn::ParamMap head;
};

/// AdamW on smoothed BCE over text nodes, batches of `batch_nodes` nodes
/// drawn across pages. Keeps the epoch with the best dev LCS F1 (train F1
/// when dev is empty). `init` optionally loads pre-trained extractor weights.
FinetuneResult finetune_boilerplate(const std::vector<BoilerplateExample>& train,
                                    const std::vector<BoilerplateExample>& dev, const model::ModelConfig& config,
                                    const nn::ParamMap* init, const FinetuneOptions& options,
                                    const std::function<void(const FinetuneEpoch&)>& on_epoch = {});

/// Page-averaged LCS F1 of extract_text against the gold texts.
eval::EvalReport evaluate_extraction(const std::vector<BoilerplateExample>& pages,
                                     const model::Extractor<float>& extractor, const BoilerplateHead<float>& head);

}  // namespace grownup::tasks
