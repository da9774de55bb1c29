#include "grownup/tasks/genre.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grownup/errors.hpp"
#include "grownup/nn/optim.hpp"

namespace grownup::tasks {

using nn::Rng;

template <typename Real>
GenreHead<Real>::GenreHead(std::size_t width, std::size_t n_classes, std::uint64_t seed, double s, double m,
                           Readout r)
    : scale(s), margin(m), readout(r) {
  if (!(s > 0)) throw InvalidConfig("genre head: scale must be positive");
  if (!(m >= 0 && m < std::numbers::pi / 2)) throw InvalidConfig("genre head: margin must be in [0, pi/2)");
  if (n_classes < 2) throw InvalidConfig("genre head: need at least two classes");
  Rng rng(seed);
  W = store.glorot("head.genre.W", width, n_classes, rng);
}

template <typename Real>
Tensor<Real> genre_logits(const Tensor<Real>& e, const GenreHead<Real>& head, const std::vector<std::size_t>* targets) {
  const std::size_t B = e.rows(), C = head.n_classes();
  for (std::size_t r = 0; r < B; ++r) {
    bool zero = true;
    for (std::size_t c = 0; c < e.cols() && zero; ++c) zero = e.at(r, c) == Real(0);
    if (zero) throw ZeroEmbedding("genre_logits: embedding row " + std::to_string(r) + " is zero");
  }
  // Near +-1 the arccos slope blows up; the clamp keeps it finite.
  const Real eps = std::is_same_v<Real, double> ? Real(1e-12) : Real(1e-6);
  const auto w = nn::transpose(nn::l2_normalize_rows(nn::transpose(head.W)));
  auto theta = nn::acos_clamped(nn::matmul(nn::l2_normalize_rows(e), w), eps);
  if (targets) {
    if (targets->size() != B) throw ShapeMismatch("genre_logits: one target per row");
    theta = nn::add(theta, nn::scale(nn::one_hot<Real>(*targets, C), static_cast<Real>(head.margin)));
  }
  const Real s = static_cast<Real>(head.scale);
  return nn::add_scalar(nn::scale(theta, Real(-2) * s / std::numbers::pi_v<Real>), s);
}

template <typename Real>
Tensor<Real> readout_feature(const model::ExtractorOutput<Real>& out, Readout readout) {
  if (readout == Readout::Cls) {
    if (!out.cls_feature) throw InvalidConfig("CLS readout needs at least one Transformer block");
    return *out.cls_feature;
  }
  return nn::mean(out.node_features, 0);
}

template <typename Real>
Tensor<Real> genre_loss(const Tensor<Real>& e, const GenreHead<Real>& head, const std::vector<std::size_t>& targets) {
  const auto logits = genre_logits(e, head, &targets);
  const auto picked = nn::sum(nn::mul(nn::one_hot<Real>(targets, head.n_classes()), nn::log_softmax_rows(logits)));
  return nn::scale(picked, Real(-1) / static_cast<Real>(targets.size()));
}

FoldSpec stratified_folds(const std::vector<std::size_t>& labels, std::size_t n_classes, std::size_t n_folds,
                          std::uint64_t seed) {
  if (n_folds < 2) throw InvalidConfig("folds: need at least two folds");
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw InvalidConfig("folds: label out of range");
    by_class[labels[i]].push_back(i);
  }
  for (std::size_t c = 0; c < n_classes; ++c)
    if (by_class[c].size() < n_folds)
      throw ClassTooSmall("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                          " pages, fewer than " + std::to_string(n_folds) + " folds");
  Rng rng(seed);
  FoldSpec spec{n_folds, std::vector<std::vector<std::size_t>>(n_folds), seed};
  // Continue the deal across classes so fold sizes differ by at most one.
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (auto i : members) spec.folds[next++ % n_folds].push_back(i);
  }
  for (auto& f : spec.folds) std::sort(f.begin(), f.end());
  return spec;
}

GenreModel::GenreModel(const model::ModelConfig& config, std::size_t n_classes, const GenreOptions& o,
                       std::uint64_t seed)
    : extractor(config, seed), head(config.K, n_classes, seed ^ 0x9e3779b97f4a7c15ULL, o.scale, o.margin, o.readout) {
  if (o.readout == Readout::Cls && config.T == 0) throw InvalidConfig("genre: CLS readout needs T >= 1");
}

std::size_t GenreModel::predict(const graph::PageGraph& page) const {
  nn::NoGradGuard no_grad;
  const auto out = extractor.forward_eval(model::GraphInput<float>::from_graph(page));
  const auto logits = genre_logits(readout_feature(out, head.readout), head);
  const auto v = logits.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void train_genre(GenreModel& model, const std::vector<graph::PageGraph>& pages, const std::vector<std::size_t>& labels,
                 const std::vector<std::size_t>& train_idx, const GenreOptions& o,
                 const std::function<void(const GenreEpoch&)>& on_epoch) {
  if (o.batch_pages == 0) throw InvalidConfig("genre: batch_pages must be positive");
  Rng rng(o.seed);
  auto params = o.freeze_backbone ? nn::collect_parameters<float>({&model.head.store})
                                  : nn::collect_parameters<float>({&model.extractor.parameters(), &model.head.store});
  nn::AdamW<float> opt(std::move(params), {.lr = o.lr, .weight_decay = o.weight_decay});
  auto order = train_idx;
  const std::size_t n_batches = (order.size() + o.batch_pages - 1) / o.batch_pages;
  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    rng.shuffle(order);
    GenreEpoch log;
    log.epoch = epoch + 1;
    log.lr = nn::cosine_warm_restart_lr(static_cast<double>(epoch), o.lr, o.restart_t0, o.restart_mult);
    for (std::size_t b = 0; b < n_batches; ++b) {
      const double t = static_cast<double>(epoch) + static_cast<double>(b) / static_cast<double>(n_batches);
      opt.set_lr(nn::cosine_warm_restart_lr(t, o.lr, o.restart_t0, o.restart_mult));
      std::vector<Tensor<float>> feats;
      std::vector<std::size_t> targets;
      for (std::size_t i = b * o.batch_pages; i < std::min(order.size(), (b + 1) * o.batch_pages); ++i) {
        const auto out = model.extractor.forward(model::GraphInput<float>::from_graph(pages[order[i]]),
                                                 model::Mode::Train, rng);
        feats.push_back(readout_feature(out, model.head.readout));
        targets.push_back(labels[order[i]]);
      }
      opt.zero_grad();
      const auto loss = genre_loss(nn::concat_rows(feats), model.head, targets);
      nn::backward(loss);
      opt.step();
      log.train_loss += loss.item() / static_cast<double>(n_batches);
    }
    if (on_epoch) on_epoch(log);
  }
}

double genre_accuracy(const GenreModel& model, const std::vector<graph::PageGraph>& pages,
                      const std::vector<std::size_t>& labels, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw EmptyCorpus("genre_accuracy: no pages");
  std::size_t correct = 0;
  for (auto i : idx) correct += model.predict(pages[i]) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

std::vector<double> CvResult::accuracies() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.accuracy);
  return out;
}

CvResult kfold_cv(const std::vector<graph::PageGraph>& pages, const std::vector<std::size_t>& labels,
                  std::size_t n_classes, const model::ModelConfig& config, const nn::ParamMap* init,
                  const GenreOptions& o, std::size_t n_folds, std::size_t repeats,
                  const std::function<void(const FoldResult&)>& on_fold) {
  if (pages.size() != labels.size()) throw InvalidConfig("cv: one label per page required");
  Rng rng(o.seed);
  CvResult result;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto spec = stratified_folds(labels, n_classes, n_folds, rng.next_u64());
    for (std::size_t f = 0; f < n_folds; ++f) {
      std::vector<std::size_t> train;
      for (std::size_t g = 0; g < n_folds; ++g)
        if (g != f) train.insert(train.end(), spec.folds[g].begin(), spec.folds[g].end());
      GenreModel m(config, n_classes, o, rng.next_u64());
      if (init) m.extractor.parameters().import_values(*init);
      GenreOptions fold_opts = o;
      fold_opts.seed = rng.next_u64();
      train_genre(m, pages, labels, train, fold_opts);
      FoldResult fr{r, f, train.size(), spec.folds[f].size(), genre_accuracy(m, pages, labels, spec.folds[f])};
      result.folds.push_back(fr);
      if (on_fold) on_fold(fr);
    }
  }
  const auto acc = result.accuracies();
  double mean = 0;
  for (double a : acc) mean += a / static_cast<double>(acc.size());
  double var = 0;
  for (double a : acc) var += (a - mean) * (a - mean);
  result.mean_accuracy = mean;
  result.std_accuracy = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
  return result;
}

template struct GenreHead<float>;
template struct GenreHead<double>;
template Tensor<float> genre_logits(const Tensor<float>&, const GenreHead<float>&, const std::vector<std::size_t>*);
template Tensor<double> genre_logits(const Tensor<double>&, const GenreHead<double>&, const std::vector<std::size_t>*);
template Tensor<float> readout_feature(const model::ExtractorOutput<float>&, Readout);
template Tensor<double> readout_feature(const model::ExtractorOutput<double>&, Readout);
template Tensor<float> genre_loss(const Tensor<float>&, const GenreHead<float>&, const std::vector<std::size_t>&);
template Tensor<double> genre_loss(const Tensor<double>&, const GenreHead<double>&, const std::vector<std::size_t>&);

}  // namespace grownup::tasks
