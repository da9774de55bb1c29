#include "grownup/pretrain/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <set>

#include "grownup/errors.hpp"
#include "grownup/nn/optim.hpp"

namespace grownup::pretrain {

namespace off = graph::offset;

std::size_t child_count_class(std::uint32_t num_children) {
  return std::min<std::size_t>(num_children, kChildClasses - 1);
}

MaskedGraph select_and_mask(const graph::PageGraph& g, std::size_t M, Rng& rng, double mask_prob) {
  MaskedGraph out{g, {}};
  const auto picks = rng.sample_without_replacement(g.n_nodes, std::min(M, g.n_nodes));
  for (std::size_t node : picks) {
    const auto row = g.row(node);
    NodeTargets t;
    std::copy_n(row.begin() + off::text, graph::kTextDim, t.text.begin());
    std::copy_n(row.begin() + off::klass, graph::kTextDim, t.klass.begin());
    std::copy_n(row.begin() + off::id, graph::kTextDim, t.id.begin());
    const auto tag_begin = row.begin() + off::tag_type;
    t.tag = static_cast<std::size_t>(std::max_element(tag_begin, tag_begin + kTagClasses) - tag_begin);
    t.child = child_count_class(g.meta[node].num_children);

    const bool masked = rng.bernoulli(mask_prob);
    if (masked) {
      std::fill_n(out.graph.features.begin() + static_cast<std::ptrdiff_t>(node * graph::kFeatureWidth),
                  graph::kFeatureWidth, 0.0f);
    }
    out.plan.selected.push_back(static_cast<std::uint32_t>(node));
    out.plan.masked.push_back(masked);
    out.plan.truth.push_back(t);
  }
  return out;
}

template <typename Real>
PretrainHeads<Real>::PretrainHeads(std::size_t width, std::size_t sim_width, std::uint64_t seed) {
  Rng rng(seed);
  tag = model::Linear<Real>::make(store, "head.tag", width, kTagClasses, rng);
  child = model::Linear<Real>::make(store, "head.child", width, kChildClasses, rng);
  text = model::Linear<Real>::make(store, "head.text", width, graph::kTextDim, rng);
  klass = model::Linear<Real>::make(store, "head.class", width, graph::kTextDim, rng);
  id = model::Linear<Real>::make(store, "head.id", width, graph::kTextDim, rng);
  sim = model::Linear<Real>::make(store, "head.sim", width, sim_width == 0 ? width : sim_width, rng);
}

template <typename Real>
Tensor<Real> cross_entropy(const Tensor<Real>& probs, const Tensor<Real>& targets) {
  return nn::scale(nn::sum(nn::mul(targets, nn::log_clamped(probs, Real(1e-12)))), Real(-1));
}

template <typename Real>
Tensor<Real> cosine_loss(const Tensor<Real>& x, const Tensor<Real>& y) {
  const auto cos = nn::sum(nn::mul(nn::l2_normalize_rows(x), nn::l2_normalize_rows(y)));
  return nn::sub(Tensor<Real>::scalar(static_cast<Real>(x.rows())), cos);
}

namespace {

template <typename Real>
Tensor<Real> target_matrix(const MaskPlan& plan, graph::TextVector NodeTargets::*field) {
  std::vector<Real> v;
  v.reserve(plan.truth.size() * graph::kTextDim);
  for (const auto& t : plan.truth) v.insert(v.end(), (t.*field).begin(), (t.*field).end());
  return Tensor<Real>({plan.truth.size(), graph::kTextDim}, std::move(v));
}

}  // namespace

template <typename Real>
MaskedLosses<Real> masked_feature_losses(const Tensor<Real>& node_features, const MaskPlan& plan,
                                         const PretrainHeads<Real>& heads) {
  if (plan.selected.empty()) {
    const auto z = Tensor<Real>::scalar(Real(0));
    return {z, z, z, z, z};
  }
  const auto x = nn::gather_rows(node_features, std::span<const std::uint32_t>(plan.selected));
  std::vector<std::size_t> tags, children;
  for (const auto& t : plan.truth) {
    tags.push_back(t.tag);
    children.push_back(t.child);
  }
  MaskedLosses<Real> out;
  out.tag = cross_entropy(nn::softmax_rows(heads.tag(x)), nn::one_hot<Real>(tags, kTagClasses));
  out.child = cross_entropy(nn::softmax_rows(heads.child(x)), nn::one_hot<Real>(children, kChildClasses));
  out.text = cosine_loss(nn::tanh(heads.text(x)), target_matrix<Real>(plan, &NodeTargets::text));
  out.klass = cosine_loss(nn::tanh(heads.klass(x)), target_matrix<Real>(plan, &NodeTargets::klass));
  out.id = cosine_loss(nn::tanh(heads.id(x)), target_matrix<Real>(plan, &NodeTargets::id));
  return out;
}

template <typename Real>
SameSite<Real> same_site_loss(const model::ExtractorOutput<Real>& a, const model::ExtractorOutput<Real>& b, int y,
                              const PretrainHeads<Real>& heads, Readout readout) {
  auto embed = [&](const model::ExtractorOutput<Real>& o) {
    if (readout == Readout::Cls && !o.cls_feature) throw InvalidConfig("CLS readout needs at least one Transformer block");
    const auto r = readout == Readout::Cls ? *o.cls_feature : nn::mean(o.node_features, 0);
    return nn::l2_normalize_rows(nn::tanh(heads.sim(r)));
  };
  const auto cos = nn::sum(nn::mul(embed(a), embed(b)));
  const auto z = nn::clamp(nn::relu(cos), Real(1e-7), Real(1 - 1e-7));
  const auto loss = y == 1 ? nn::scale(nn::log_clamped(z, Real(0)), Real(-1))
                           : nn::scale(nn::log_clamped(nn::add_scalar(nn::scale(z, Real(-1)), Real(1)), Real(0)), Real(-1));
  return {loss, static_cast<double>(z.item())};
}

double joint_loss(const LossComponents& c, const LossWeights& w) {
  return w.sim * c.sim + w.tag * c.tag + w.text * c.text + w.id * c.id + w.klass * c.klass + w.child * c.child;
}

template <typename Real>
Tensor<Real> joint_loss(const Tensor<Real>& sim, const MaskedLosses<Real>& a, const MaskedLosses<Real>& b,
                        const LossWeights& w) {
  auto term = [](const Tensor<Real>& x, const Tensor<Real>& y, double weight) {
    return nn::scale(nn::add(x, y), static_cast<Real>(weight));
  };
  auto total = nn::scale(sim, static_cast<Real>(w.sim));
  total = nn::add(total, term(a.tag, b.tag, w.tag));
  total = nn::add(total, term(a.text, b.text, w.text));
  total = nn::add(total, term(a.id, b.id, w.id));
  total = nn::add(total, term(a.klass, b.klass, w.klass));
  return nn::add(total, term(a.child, b.child, w.child));
}

std::vector<PagePair> permute_pairs(const std::vector<PagePair>& batch, const std::vector<std::string>& site_of,
                                    Rng& rng) {
  std::set<std::string_view> sites;
  for (const auto& p : batch) sites.insert(site_of.at(p.a));
  if (sites.size() < 2) throw SingleSiteBatch("batch of " + std::to_string(batch.size()) + " pairs covers one website");

  std::vector<bool> positive(batch.size(), false);
  for (std::size_t i : rng.sample_without_replacement(batch.size(), batch.size() / 2)) positive[i] = true;
  std::vector<PagePair> out = batch;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i].label = positive[i] ? 1 : 0;
    if (positive[i]) continue;
    std::vector<std::size_t> donors;
    for (std::size_t j = 0; j < batch.size(); ++j)
      if (site_of[batch[j].b] != site_of[batch[i].a]) donors.push_back(j);
    out[i].b = batch[donors[rng.index(donors.size())]].b;
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_site(const std::vector<std::string>& site_of,
                                                                            double dev_fraction, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> by_site;
  for (std::size_t i = 0; i < site_of.size(); ++i) by_site[site_of[i]].push_back(i);
  for (auto& [site, pages] : by_site) rng.shuffle(pages);
  auto n_dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(site_of.size())));
  // Dev negatives need a second site.
  if (n_dev == 1) n_dev = 2;

  std::set<std::size_t> dev;
  for (std::size_t round = 0; dev.size() < n_dev; ++round) {
    bool took = false;
    for (auto& [site, pages] : by_site) {
      if (dev.size() == n_dev) break;
      if (pages.size() >= round + 3) {
        dev.insert(pages[round]);
        took = true;
      }
    }
    if (!took) break;
  }
  std::set<std::string_view> dev_sites;
  for (std::size_t i : dev) dev_sites.insert(site_of[i]);
  if (dev_sites.size() < 2) dev.clear();
  std::vector<std::size_t> train_ids, dev_ids(dev.begin(), dev.end());
  for (std::size_t i = 0; i < site_of.size(); ++i)
    if (!dev.count(i)) train_ids.push_back(i);
  return {train_ids, dev_ids};
}

namespace {

using F = float;

struct PairLosses {
  Tensor<F> total;
  LossComponents parts;
  double z = 0;
  std::size_t zero_targets = 0;
};

std::size_t count_zero_targets(const MaskPlan& plan) {
  std::size_t n = 0;
  for (const auto& t : plan.truth)
    for (const auto* v : {&t.text, &t.klass, &t.id})
      n += std::all_of(v->begin(), v->end(), [](float x) { return x == 0.0f; });
  return n;
}

PairLosses pair_losses(const model::Extractor<F>& ex, const PretrainHeads<F>& heads, const MaskedGraph& a,
                       const MaskedGraph& b, int label, const PretrainOptions& o, model::Mode mode, Rng& rng) {
  const auto out_a = ex.forward(model::GraphInput<F>::from_graph(a.graph), mode, rng);
  const auto out_b = ex.forward(model::GraphInput<F>::from_graph(b.graph), mode, rng);
  const auto la = masked_feature_losses(out_a.node_features, a.plan, heads);
  const auto lb = masked_feature_losses(out_b.node_features, b.plan, heads);
  const auto sim = same_site_loss(out_a, out_b, label, heads, o.readout);
  PairLosses r;
  r.total = joint_loss(sim.loss, la, lb, o.weights);
  r.z = sim.z;
  r.parts = {sim.loss.item(),
             la.tag.item() + lb.tag.item(),
             la.text.item() + lb.text.item(),
             la.id.item() + lb.id.item(),
             la.klass.item() + lb.klass.item(),
             la.child.item() + lb.child.item()};
  r.zero_targets = count_zero_targets(a.plan) + count_zero_targets(b.plan);
  return r;
}

// Pairs each page with a random other page of its own site, then orders the
// pairs by cycling through sites so every batch mixes websites.
std::vector<PagePair> positive_pairs(const std::vector<std::size_t>& pages, const std::vector<std::string>& site_of,
                                     Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> by_site;
  for (auto p : pages) by_site[site_of[p]].push_back(p);
  std::vector<std::vector<PagePair>> queues;
  for (auto& [site, members] : by_site) {
    if (members.size() < 2) continue;
    std::vector<PagePair> q;
    for (auto a : members) {
      std::size_t b = a;
      while (b == a) b = members[rng.index(members.size())];
      q.push_back({a, b, 1});
    }
    rng.shuffle(q);
    queues.push_back(std::move(q));
  }
  std::vector<PagePair> out;
  for (bool any = true; any;) {
    any = false;
    std::vector<std::size_t> order(queues.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (auto i : order) {
      if (queues[i].empty()) continue;
      out.push_back(queues[i].back());
      queues[i].pop_back();
      any = true;
    }
  }
  return out;
}

std::vector<std::vector<PagePair>> make_batches(const std::vector<PagePair>& pairs,
                                                const std::vector<std::string>& site_of, std::size_t batch_pairs) {
  std::vector<std::vector<PagePair>> batches;
  for (std::size_t i = 0; i < pairs.size(); i += batch_pairs) {
    batches.emplace_back(pairs.begin() + static_cast<std::ptrdiff_t>(i),
                         pairs.begin() + static_cast<std::ptrdiff_t>(std::min(pairs.size(), i + batch_pairs)));
  }
  // A single-site tail joins the batch before it.
  auto single_site = [&](const std::vector<PagePair>& b) {
    return std::all_of(b.begin(), b.end(), [&](const PagePair& p) { return site_of[p.a] == site_of[b[0].a]; });
  };
  if (batches.size() >= 2 && single_site(batches.back())) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

}  // namespace

PretrainResult pretrain_run(const std::vector<graph::PageGraph>& pages, const std::vector<std::string>& site_of,
                            const model::ModelConfig& config, const PretrainOptions& o,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  if (pages.size() != site_of.size()) throw InvalidConfig("pretrain: one site key per page required");
  if (o.batch_pairs < 2) throw InvalidConfig("pretrain: batch_pairs must be >= 2");
  if (o.readout == Readout::Cls && config.T == 0) throw InvalidConfig("pretrain: CLS readout needs T >= 1");
  Rng rng(o.seed);
  model::Extractor<F> ex(config, rng.next_u64());
  PretrainHeads<F> heads(config.K, o.sim_width, rng.next_u64());
  nn::AdamW<F> opt(nn::collect_parameters<F>({&ex.parameters(), &heads.store}), {.lr = o.lr});

  PretrainResult result;
  std::tie(result.train_pages, result.dev_pages) = split_by_site(site_of, o.dev_fraction, rng);

  // Fixed dev pairs and masks so dev losses are comparable across epochs.
  std::map<std::string, std::vector<std::size_t>> train_by_site;
  for (auto p : result.train_pages) train_by_site[site_of[p]].push_back(p);
  std::vector<PagePair> dev_pairs;
  for (auto d : result.dev_pages) {
    auto partners = train_by_site[site_of[d]];
    rng.shuffle(partners);
    for (std::size_t k = 0; k < std::min(o.dev_partners, partners.size()); ++k) dev_pairs.push_back({d, partners[k], 1});
  }
  std::vector<std::tuple<PagePair, MaskedGraph, MaskedGraph>> dev_set;
  if (!dev_pairs.empty()) {
    for (const auto& p : permute_pairs(dev_pairs, site_of, rng)) {
      auto ma = select_and_mask(pages[p.a], o.M, rng, o.mask_prob);
      auto mb = select_and_mask(pages[p.b], o.M, rng, o.mask_prob);
      dev_set.emplace_back(p, std::move(ma), std::move(mb));
    }
  }

  result.best_dev_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= o.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    std::size_t n_pairs = 0;
    for (const auto& batch : make_batches(positive_pairs(result.train_pages, site_of, rng), site_of, o.batch_pairs)) {
      const auto labeled = permute_pairs(batch, site_of, rng);
      opt.zero_grad();
      for (const auto& p : labeled) {
        const auto ma = select_and_mask(pages[p.a], o.M, rng, o.mask_prob);
        const auto mb = select_and_mask(pages[p.b], o.M, rng, o.mask_prob);
        auto r = pair_losses(ex, heads, ma, mb, p.label, o, model::Mode::Train, rng);
        nn::backward(nn::scale(r.total, F(1) / static_cast<F>(labeled.size())));
        log.train_loss += r.total.item();
        auto& c = log.train_components;
        c.sim += r.parts.sim, c.tag += r.parts.tag, c.text += r.parts.text;
        c.id += r.parts.id, c.klass += r.parts.klass, c.child += r.parts.child;
        log.zero_targets += r.zero_targets;
        ++n_pairs;
      }
      opt.step();
    }
    if (n_pairs > 0) {
      const double n = static_cast<double>(n_pairs);
      log.train_loss /= n;
      auto& c = log.train_components;
      c.sim /= n, c.tag /= n, c.text /= n, c.id /= n, c.klass /= n, c.child /= n;
    }

    if (!dev_set.empty()) {
      nn::NoGradGuard no_grad;
      std::size_t correct = 0;
      for (const auto& [p, ma, mb] : dev_set) {
        Rng unused(0);
        const auto r = pair_losses(ex, heads, ma, mb, p.label, o, model::Mode::Eval, unused);
        log.dev_loss += r.total.item();
        correct += (r.z > 0.5) == (p.label == 1);
      }
      log.dev_loss /= static_cast<double>(dev_set.size());
      log.dev_accuracy = static_cast<double>(correct) / static_cast<double>(dev_set.size());
    } else {
      log.dev_loss = log.train_loss;
    }
    if (log.dev_loss < result.best_dev_loss) {
      result.best_dev_loss = log.dev_loss;
      result.best_epoch = epoch;
      result.best_extractor = ex.parameters().export_values();
      result.best_heads = heads.store.export_values();
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

template struct PretrainHeads<float>;
template struct PretrainHeads<double>;
template Tensor<float> cross_entropy(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> cross_entropy(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> cosine_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> cosine_loss(const Tensor<double>&, const Tensor<double>&);
template MaskedLosses<float> masked_feature_losses(const Tensor<float>&, const MaskPlan&, const PretrainHeads<float>&);
template MaskedLosses<double> masked_feature_losses(const Tensor<double>&, const MaskPlan&,
                                                    const PretrainHeads<double>&);
template SameSite<float> same_site_loss(const model::ExtractorOutput<float>&, const model::ExtractorOutput<float>&, int,
                                        const PretrainHeads<float>&, Readout);
template SameSite<double> same_site_loss(const model::ExtractorOutput<double>&, const model::ExtractorOutput<double>&,
                                         int, const PretrainHeads<double>&, Readout);
template Tensor<float> joint_loss(const Tensor<float>&, const MaskedLosses<float>&, const MaskedLosses<float>&,
                                  const LossWeights&);
template Tensor<double> joint_loss(const Tensor<double>&, const MaskedLosses<double>&, const MaskedLosses<double>&,
                                   const LossWeights&);

}  // namespace grownup::pretrain
