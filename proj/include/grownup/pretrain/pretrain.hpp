#pragma once

// Self-supervised pre-training: masked DOM feature prediction on M sampled
// nodes per page plus same-website prediction on page pairs.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "grownup/graph/page_graph.hpp"
#include "grownup/model/extractor.hpp"

namespace grownup::pretrain {

using model::Tensor;
using nn::Rng;

inline constexpr std::size_t kTagClasses = graph::kNumTags + 1;  // 84 with the catch-all
inline constexpr std::size_t kChildClasses = 32;                 // 0..30 plus 31+

/// Prediction targets of one selected node, read from its unmasked row.
struct NodeTargets {
  graph::TextVector text{};
  graph::TextVector klass{};
  graph::TextVector id{};
  std::size_t tag = 0;
  std::size_t child = 0;
};

struct MaskPlan {
  std::vector<std::uint32_t> selected;  // distinct node ids
  std::vector<bool> masked;             // per selected node
  std::vector<NodeTargets> truth;       // per selected node
};

struct MaskedGraph {
  graph::PageGraph graph;
  MaskPlan plan;
};

std::size_t child_count_class(std::uint32_t num_children);

/// Samples min(M, N) distinct nodes and zeroes each one's whole feature row
/// with probability mask_prob. Unmasked selected rows are left as they are.
MaskedGraph select_and_mask(const graph::PageGraph& g, std::size_t M, Rng& rng, double mask_prob = 0.85);

template <typename Real>
struct PretrainHeads {
  nn::ParameterStore<Real> store;
  model::Linear<Real> tag, child, text, klass, id, sim;

  PretrainHeads(std::size_t width, std::size_t sim_width, std::uint64_t seed);
  PretrainHeads(const PretrainHeads&) = delete;
  PretrainHeads& operator=(const PretrainHeads&) = delete;
};

/// -sum_rows sum_c y log(max(x, 1e-12)) for row distributions x.
template <typename Real>
Tensor<Real> cross_entropy(const Tensor<Real>& probs, const Tensor<Real>& targets);

/// sum_rows 1 - cos(x_r, y_r). A zero row on either side scores 1.
template <typename Real>
Tensor<Real> cosine_loss(const Tensor<Real>& x, const Tensor<Real>& y);

template <typename Real>
struct MaskedLosses {
  Tensor<Real> tag, child, text, klass, id;
};

/// Per-type losses summed over the plan's selected nodes.
template <typename Real>
MaskedLosses<Real> masked_feature_losses(const Tensor<Real>& node_features, const MaskPlan& plan,
                                         const PretrainHeads<Real>& heads);

using model::Readout;

template <typename Real>
struct SameSite {
  Tensor<Real> loss;
  double z = 0.0;  // clamped similarity, the same-site score
};

/// Binary cross-entropy on z = clamp(max(cos(x1, x2), 0)) with
/// x = tanh(readout W + b).
template <typename Real>
SameSite<Real> same_site_loss(const model::ExtractorOutput<Real>& a, const model::ExtractorOutput<Real>& b, int y,
                              const PretrainHeads<Real>& heads, Readout readout = Readout::Mean);

struct LossWeights {
  double sim = 0.05;
  double tag = 0.2;
  double text = 0.5;
  double id = 0.05;
  double klass = 0.1;
  double child = 0.1;

  std::array<double, 6> as_array() const { return {sim, tag, text, id, klass, child}; }
};

/// Scalar form of the joint loss; each pair component is page 1 plus page 2.
struct LossComponents {
  double sim = 0, tag = 0, text = 0, id = 0, klass = 0, child = 0;
};
double joint_loss(const LossComponents& pair, const LossWeights& w);

template <typename Real>
Tensor<Real> joint_loss(const Tensor<Real>& sim, const MaskedLosses<Real>& a, const MaskedLosses<Real>& b,
                        const LossWeights& w);

/// Pair of page indices into a corpus.
struct PagePair {
  std::size_t a;
  std::size_t b;
  int label = 1;
};

/// Keeps a uniformly chosen floor(B/2) pairs positive and gives every other
/// pair a page_b drawn from a different website in the batch. Throws
/// SingleSiteBatch when the batch covers one site.
std::vector<PagePair> permute_pairs(const std::vector<PagePair>& batch, const std::vector<std::string>& site_of,
                                    Rng& rng);

struct PretrainOptions {
  std::size_t epochs = 80;
  std::size_t batch_pairs = 48;
  double lr = 1e-3;
  double dev_fraction = 0.1;
  std::size_t M = 16;
  double mask_prob = 0.85;
  std::size_t sim_width = 0;  // 0 means K
  std::size_t dev_partners = 4;
  Readout readout = Readout::Mean;
  LossWeights weights;
  std::uint64_t seed = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  LossComponents train_components;
  double dev_loss = 0;
  double dev_accuracy = 0;
  std::size_t zero_targets = 0;  // selected nodes with an all-zero text/class/id target
};

struct PretrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_loss = 0;
  nn::ParamMap best_extractor;
  nn::ParamMap best_heads;
  std::vector<std::size_t> train_pages, dev_pages;
};

/// Splits pages into train/dev per site, then trains extractor and heads
/// jointly with Adam. Keeps the extractor weights of the lowest dev loss.
PretrainResult pretrain_run(const std::vector<graph::PageGraph>& pages, const std::vector<std::string>& site_of,
                            const model::ModelConfig& config, const PretrainOptions& options,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

/// Site-stratified dev split: about dev_fraction of all pages, taken round
/// robin over sites and never leaving a site with fewer than two train pages.
/// A dev set is either empty or spans at least two sites.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_site(const std::vector<std::string>& site_of,
                                                                            double dev_fraction, Rng& rng);

}  // namespace grownup::pretrain
