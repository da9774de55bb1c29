#include "grownup/tasks/boilerplate.hpp"

#include <algorithm>
#include <map>

#include "grownup/errors.hpp"
#include "grownup/nn/optim.hpp"

namespace grownup::tasks {

std::vector<std::string> page_tokens(const graph::PageGraph& page) {
  std::vector<std::string> out;
  for (const auto& m : page.meta) {
    if (!m.has_text) continue;
    auto t = eval::tokenize(m.text);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

AlignedLabels align_ground_truth(const graph::PageGraph& page, std::string_view gold) {
  AlignedLabels out;
  std::vector<std::string> a;
  std::vector<std::size_t> owner;  // position in out.nodes of each token
  for (std::size_t i = 0; i < page.n_nodes; ++i) {
    if (!page.meta[i].has_text) continue;
    auto toks = eval::tokenize(page.meta[i].text);
    if (toks.empty()) continue;
    for (auto& t : toks) {
      a.push_back(std::move(t));
      owner.push_back(out.nodes.size());
    }
    out.nodes.push_back(static_cast<std::uint32_t>(i));
  }
  out.labels.assign(out.nodes.size(), 0);
  const auto b = eval::tokenize(gold);
  if (a.empty() || b.empty()) return out;

  // Direction table: 0 diagonal match, 1 up (skip a page token), 2 left.
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::uint8_t> dir(n * m);
  std::vector<std::uint32_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      std::uint8_t d;
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
        d = 0;
      } else if (prev[j] >= cur[j - 1]) {
        cur[j] = prev[j];
        d = 1;
      } else {
        cur[j] = cur[j - 1];
        d = 2;
      }
      dir[(i - 1) * m + (j - 1)] = d;
    }
    std::swap(prev, cur);
  }

  std::vector<std::size_t> matched(out.nodes.size(), 0), total(out.nodes.size(), 0);
  for (auto o : owner) ++total[o];
  for (std::size_t i = n, j = m; i > 0 && j > 0;) {
    switch (dir[(i - 1) * m + (j - 1)]) {
      case 0:
        ++matched[owner[i - 1]];
        --i, --j;
        break;
      case 1:
        --i;
        break;
      default:
        --j;
    }
  }
  for (std::size_t k = 0; k < out.nodes.size(); ++k) out.labels[k] = 2 * matched[k] > total[k] ? 1 : 0;
  return out;
}

template <typename Real>
BoilerplateHead<Real>::BoilerplateHead(std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  proj = model::Linear<Real>::make(store, "head.boilerplate", width, 1, rng);
}

template <typename Real>
Tensor<Real> BoilerplateHead<Real>::operator()(const Tensor<Real>& node_features) const {
  return nn::sigmoid(proj(node_features));
}

template <typename Real>
Tensor<Real> smoothed_bce(const Tensor<Real>& scores, const std::vector<int>& labels, double smoothing) {
  if (scores.rows() != labels.size() || scores.cols() != 1) throw ShapeMismatch("smoothed_bce: one score per label");
  std::vector<Real> t(labels.size()), u(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i] = static_cast<Real>(labels[i] * (1 - smoothing) + smoothing / 2);
    u[i] = 1 - t[i];
  }
  const Tensor<Real> tt({labels.size(), 1}, std::move(t)), ut({labels.size(), 1}, std::move(u));
  const Real floor(1e-7);
  const auto pos = nn::sum(nn::mul(tt, nn::log_clamped(scores, floor)));
  const auto neg = nn::sum(nn::mul(ut, nn::log_clamped(nn::add_scalar(nn::scale(scores, Real(-1)), Real(1)), floor)));
  return nn::scale(nn::add(pos, neg), Real(-1) / static_cast<Real>(labels.size()));
}

std::vector<std::pair<std::uint32_t, double>> text_node_scores(const graph::PageGraph& page,
                                                              const model::Extractor<float>& extractor,
                                                              const BoilerplateHead<float>& head) {
  std::vector<std::uint32_t> nodes;
  for (std::size_t i = 0; i < page.n_nodes; ++i)
    if (page.meta[i].has_text) nodes.push_back(static_cast<std::uint32_t>(i));
  std::vector<std::pair<std::uint32_t, double>> out;
  if (nodes.empty()) return out;
  nn::NoGradGuard no_grad;
  const auto h = extractor.forward_eval(model::GraphInput<float>::from_graph(page)).node_features;
  const auto s = head(nn::gather_rows(h, std::span<const std::uint32_t>(nodes)));
  for (std::size_t k = 0; k < nodes.size(); ++k) out.emplace_back(nodes[k], s.at(k));
  return out;
}

std::string extract_text(const graph::PageGraph& page, const model::Extractor<float>& extractor,
                         const BoilerplateHead<float>& head) {
  std::string out;
  for (const auto& [node, score] : text_node_scores(page, extractor, head)) {
    if (score <= head.threshold) continue;
    if (!out.empty()) out += ' ';
    out += page.meta[node].text;
  }
  return out;
}

eval::EvalReport evaluate_extraction(const std::vector<BoilerplateExample>& pages,
                                     const model::Extractor<float>& extractor, const BoilerplateHead<float>& head) {
  std::vector<eval::PrecisionRecall> per_page;
  for (const auto& p : pages) per_page.push_back(eval::lcs_precision_recall(extract_text(p.graph, extractor, head), p.gold));
  return eval::corpus_f1(per_page);
}

FinetuneResult finetune_boilerplate(const std::vector<BoilerplateExample>& train,
                                    const std::vector<BoilerplateExample>& dev, const model::ModelConfig& config,
                                    const nn::ParamMap* init, const FinetuneOptions& o,
                                    const std::function<void(const FinetuneEpoch&)>& on_epoch) {
  if (train.empty()) throw InvalidConfig("finetune: empty train set");
  if (o.batch_nodes == 0) throw InvalidConfig("finetune: batch_nodes must be positive");
  Rng rng(o.seed);
  model::Extractor<float> ex(config, rng.next_u64());
  if (init) ex.parameters().import_values(*init);
  BoilerplateHead<float> head(config.K, rng.next_u64());
  head.threshold = o.threshold;
  nn::AdamW<float> opt(nn::collect_parameters<float>({&ex.parameters(), &head.store}),
                       {.lr = o.lr, .weight_decay = o.weight_decay});

  struct Sample {
    std::uint32_t page;
    std::uint32_t node;
    int label;
  };
  std::vector<Sample> samples;
  for (std::size_t p = 0; p < train.size(); ++p) {
    const auto al = align_ground_truth(train[p].graph, train[p].gold);
    for (std::size_t k = 0; k < al.nodes.size(); ++k)
      samples.push_back({static_cast<std::uint32_t>(p), al.nodes[k], al.labels[k]});
  }
  if (samples.empty()) throw InvalidConfig("finetune: train pages contain no text nodes");

  FinetuneResult result;
  for (std::size_t epoch = 1; epoch <= o.epochs; ++epoch) {
    FinetuneEpoch log;
    log.epoch = epoch;
    rng.shuffle(samples);
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < samples.size(); begin += o.batch_nodes) {
      const std::size_t end = std::min(samples.size(), begin + o.batch_nodes);
      std::map<std::uint32_t, std::pair<std::vector<std::uint32_t>, std::vector<int>>> by_page;
      for (std::size_t i = begin; i < end; ++i) {
        by_page[samples[i].page].first.push_back(samples[i].node);
        by_page[samples[i].page].second.push_back(samples[i].label);
      }
      opt.zero_grad();
      double batch_loss = 0;
      for (const auto& [page, rows] : by_page) {
        const auto out = ex.forward(model::GraphInput<float>::from_graph(train[page].graph), model::Mode::Train, rng);
        const auto scores = head(nn::gather_rows(out.node_features, std::span<const std::uint32_t>(rows.first)));
        const auto loss = nn::scale(smoothed_bce(scores, rows.second, o.label_smoothing),
                                    static_cast<float>(rows.first.size()) / static_cast<float>(end - begin));
        nn::backward(loss);
        batch_loss += loss.item();
      }
      opt.step();
      log.train_loss += batch_loss;
      ++n_batches;
    }
    log.train_loss /= static_cast<double>(n_batches);

    if (!dev.empty()) log.dev_f1 = evaluate_extraction(dev, ex, head).corpus_f1;
    if (o.track_train_f1 || dev.empty()) log.train_f1 = evaluate_extraction(train, ex, head).corpus_f1;
    const double score = dev.empty() ? *log.train_f1 : log.dev_f1;
    if (score > result.best_dev_f1) {
      result.best_dev_f1 = score;
      result.best_epoch = epoch;
      result.extractor = ex.parameters().export_values();
      result.head = head.store.export_values();
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

template struct BoilerplateHead<float>;
template struct BoilerplateHead<double>;
template Tensor<float> smoothed_bce(const Tensor<float>&, const std::vector<int>&, double);
template Tensor<double> smoothed_bce(const Tensor<double>&, const std::vector<int>&, double);

}  // namespace grownup::tasks
