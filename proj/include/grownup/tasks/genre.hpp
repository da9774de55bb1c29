#pragma once

// Graph-level fine-tuning: webpage genre with a Li-ArcFace head and
// stratified K-fold cross-validation.

#include <functional>
#include <optional>
#include <vector>

#include "grownup/graph/page_graph.hpp"
#include "grownup/model/extractor.hpp"

namespace grownup::tasks {

using model::Readout;
using model::Tensor;

template <typename Real>
struct GenreHead {
  nn::ParameterStore<Real> store;
  Tensor<Real> W;  // [K, n_classes]; class columns are normalized at use
  double scale = 5.0;
  double margin = 0.3;
  Readout readout = Readout::Cls;

  GenreHead(std::size_t width, std::size_t n_classes, std::uint64_t seed, double scale = 5.0, double margin = 0.3,
            Readout readout = Readout::Cls);
  GenreHead(const GenreHead&) = delete;
  GenreHead& operator=(const GenreHead&) = delete;

  std::size_t n_classes() const { return W.cols(); }
};

/// Li-ArcFace logits for embeddings e [B, K]: s (pi - 2 theta_c) / pi with
/// theta_c the angle to class c; the margin m is added to the target angle
/// when `targets` is given. Throws ZeroEmbedding for a zero row.
template <typename Real>
Tensor<Real> genre_logits(const Tensor<Real>& embeddings, const GenreHead<Real>& head,
                          const std::vector<std::size_t>* targets = nullptr);

/// Readout feature of one extractor output, [1, K].
template <typename Real>
Tensor<Real> readout_feature(const model::ExtractorOutput<Real>& out, Readout readout);

/// Mean softmax cross-entropy of the margin logits.
template <typename Real>
Tensor<Real> genre_loss(const Tensor<Real>& embeddings, const GenreHead<Real>& head,
                        const std::vector<std::size_t>& targets);

struct FoldSpec {
  std::size_t n_folds = 10;
  std::vector<std::vector<std::size_t>> folds;  // page indices per fold
  std::uint64_t seed = 0;
};

/// Stratified partition: each class is shuffled and dealt round robin over
/// the folds. Throws ClassTooSmall if a class has fewer than n_folds pages.
FoldSpec stratified_folds(const std::vector<std::size_t>& labels, std::size_t n_classes, std::size_t n_folds,
                          std::uint64_t seed);

struct GenreOptions {
  std::size_t epochs = 35;
  std::size_t batch_pages = 16;
  double lr = 0.002;
  double weight_decay = 1e-4;
  double restart_t0 = 5;
  double restart_mult = 1;
  double scale = 5.0;
  double margin = 0.3;
  Readout readout = Readout::Cls;
  bool freeze_backbone = false;
  std::uint64_t seed = 1;
};

struct GenreModel {
  model::Extractor<float> extractor;
  GenreHead<float> head;

  GenreModel(const model::ModelConfig& config, std::size_t n_classes, const GenreOptions& options,
             std::uint64_t seed);
  std::size_t predict(const graph::PageGraph& page) const;
};

struct GenreEpoch {
  std::size_t epoch = 0;
  double train_loss = 0;
  double lr = 0;
};

/// Trains on pages[train_idx] with AdamW and cosine warm restarts stepped
/// per batch.
void train_genre(GenreModel& model, const std::vector<graph::PageGraph>& pages,
                 const std::vector<std::size_t>& labels, const std::vector<std::size_t>& train_idx,
                 const GenreOptions& options, const std::function<void(const GenreEpoch&)>& on_epoch = {});

double genre_accuracy(const GenreModel& model, const std::vector<graph::PageGraph>& pages,
                      const std::vector<std::size_t>& labels, const std::vector<std::size_t>& idx);

struct FoldResult {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double accuracy = 0;
};

struct CvResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0;
  double std_accuracy = 0;  // sample standard deviation

  std::vector<double> accuracies() const;
};

/// `repeats` runs of stratified n-fold CV, each with fresh folds and every
/// fold trained from `init` (or random weights).
CvResult kfold_cv(const std::vector<graph::PageGraph>& pages, const std::vector<std::size_t>& labels,
                  std::size_t n_classes, const model::ModelConfig& config, const nn::ParamMap* init,
                  const GenreOptions& options, std::size_t n_folds = 10, std::size_t repeats = 3,
                  const std::function<void(const FoldResult&)>& on_fold = {});

}  // namespace grownup::tasks
