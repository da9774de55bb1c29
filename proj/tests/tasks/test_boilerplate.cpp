#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"
#include "grownup/graph/text_encoder.hpp"
#include "grownup/tasks/boilerplate.hpp"
#include "grownup/tasks/profiles.hpp"
#include "support/gradcheck.hpp"

using namespace grownup;
using namespace grownup::tasks;

namespace {

graph::PageGraph page(const std::string& body) {
  static const graph::HashedNgramEncoder enc;
  return graph::featurize_html("<html><body>" + body + "</body></html>", enc);
}

std::vector<std::string> node_texts(const graph::PageGraph& g, const AlignedLabels& al) {
  std::vector<std::string> out;
  for (auto n : al.nodes) out.push_back(g.meta[n].text);
  return out;
}

bool is_subsequence(const std::vector<std::string>& a, const std::vector<std::string>& of) {
  std::size_t j = 0;
  for (const auto& t : of)
    if (j < a.size() && a[j] == t) ++j;
  return j == a.size();
}

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.S = 1, c.T = 1, c.K = 8, c.N_h = 2, c.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("alignment trivial cases") {
  const auto g = page("<div><p>alpha beta</p><p>gamma</p><span>delta eps</span></div><p> </p>");
  auto al = align_ground_truth(g, "alpha beta gamma delta eps");
  REQUIRE(al.nodes.size() == 3);
  CHECK(node_texts(g, al) == std::vector<std::string>{"alpha beta", "gamma", "delta eps"});
  CHECK(al.labels == std::vector<int>{1, 1, 1});
  al = align_ground_truth(g, "");
  CHECK(al.labels == std::vector<int>{0, 0, 0});
  al = align_ground_truth(g, "gamma");
  CHECK(al.labels == std::vector<int>{0, 1, 0});
  // Exactly half is not a majority.
  al = align_ground_truth(g, "alpha");
  CHECK(al.labels == std::vector<int>{0, 0, 0});
  al = align_ground_truth(g, "alpha x gamma delta");
  CHECK(al.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("alignment recovers the source nodes of a gold built from node texts") {
  nn::Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    std::string body, gold;
    std::vector<int> expect;
    int word = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (std::size_t k = 0, len = 1 + rng.index(4); k < len; ++k) text += (k ? " w" : "w") + std::to_string(word++);
      body += "<p>" + text + "</p>";
      const bool keep = rng.bernoulli(0.5);
      expect.push_back(keep);
      if (keep) gold += text + "\n";
    }
    const auto g = page(body);
    const auto al = align_ground_truth(g, gold);
    CHECK(al.labels == expect);
    // Deterministic and idempotent.
    CHECK(align_ground_truth(g, gold).labels == al.labels);
  }
}

TEST_CASE("alignment matches the token-level DP count") {
  nn::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::string body, gold;
    for (std::size_t i = 0, n = 1 + rng.index(5); i < n; ++i) {
      body += "<p>";
      for (std::size_t k = 0, len = 1 + rng.index(4); k < len; ++k) body += std::string(1, 'a' + rng.index(3)) + " ";
      body += "</p>";
    }
    for (std::size_t k = 0, len = rng.index(10); k < len; ++k) gold += std::string(1, 'a' + rng.index(3)) + " ";
    const auto g = page(body);
    const auto al = align_ground_truth(g, gold);
    // Every content node has a strict majority of matched tokens, so the
    // LCS is at least the sum of those majorities.
    std::size_t lower = 0;
    for (std::size_t k = 0; k < al.nodes.size(); ++k)
      if (al.labels[k]) lower += eval::tokenize(g.meta[al.nodes[k]].text).size() / 2 + 1;
    CHECK(lower <= eval::lcs_length(page_tokens(g), eval::tokenize(gold)));
  }
}

TEST_CASE("smoothed binary cross-entropy") {
  const nn::Tensor<double> s({3, 1}, {0.9, 0.2, 0.5});
  const std::vector<int> y{1, 0, 1};
  const double a = 0.01;
  double expect = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double t = y[i] * (1 - a) + a / 2;
    expect -= t * std::log(s.at(i)) + (1 - t) * std::log(1 - s.at(i));
  }
  CHECK(smoothed_bce(s, y, a).item() == doctest::Approx(expect / 3).epsilon(1e-12));
  CHECK_THROWS_AS(smoothed_bce(s, {1, 0}, a), ShapeMismatch);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::Rng rng(seed);
    BoilerplateHead<double> head(4, seed);
    auto x = testing::random_tensor({5, 4}, rng);
    std::vector<int> labels(5);
    for (auto& l : labels) l = static_cast<int>(rng.index(2));
    std::vector<nn::Tensor<double>> wrt{x};
    for (const auto& [name, t] : head.store.entries()) wrt.push_back(t);
    const auto r = testing::check_gradients([&] { return smoothed_bce(head(x), labels, a); }, wrt, 1e-6, 1e-4);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("extract_text selects nodes above the threshold") {
  const auto g = page("<h1>one two</h1><div>three<p>four five</p></div><p>six</p>");
  model::Extractor<float> ex(tiny_config(), 3);
  BoilerplateHead<float> head(8, 4);
  const auto scores = text_node_scores(g, ex, head);
  REQUIRE(scores.size() == 4);

  head.threshold = -1;
  CHECK(extract_text(g, ex, head) == "one two three four five six");
  head.threshold = 1;
  CHECK(extract_text(g, ex, head) == "");

  // Every threshold between two sorted scores selects exactly the nodes above it.
  std::vector<double> sorted;
  for (const auto& s : scores) sorted.push_back(s.second);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    if (sorted[k] == sorted[k + 1]) continue;
    head.threshold = (sorted[k] + sorted[k + 1]) / 2;
    std::string expect;
    for (const auto& [node, s] : scores)
      if (s > head.threshold) expect += (expect.empty() ? "" : " ") + g.meta[node].text;
    CHECK(extract_text(g, ex, head) == expect);
    CHECK(is_subsequence(eval::tokenize(extract_text(g, ex, head)), page_tokens(g)));
  }
}

TEST_CASE("fine-tuning bookkeeping on a tiny corpus") {
  const auto pages = corpus::synth_boilerplate_corpus(6, 5);
  graph::HashedNgramEncoder enc;
  std::vector<BoilerplateExample> train, dev;
  for (std::size_t i = 0; i < pages.size(); ++i)
    (i < 4 ? train : dev).push_back({graph::featurize_html(pages[i].html, enc), pages[i].gold});
  FinetuneOptions o;
  o.epochs = 3, o.batch_nodes = 16, o.seed = 9, o.track_train_f1 = true;
  std::size_t calls = 0;
  const auto r = finetune_boilerplate(train, dev, tiny_config(), nullptr, o, [&](const FinetuneEpoch&) { ++calls; });
  CHECK(calls == 3);
  REQUIRE(r.log.size() == 3);
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_dev_f1 == r.log[r.best_epoch - 1].dev_f1);
  for (const auto& e : r.log) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(e.train_f1.has_value());
  }
  // The kept weights reproduce the best dev score.
  model::Extractor<float> ex(tiny_config(), 0);
  ex.parameters().import_values(r.extractor);
  BoilerplateHead<float> head(8, 0);
  head.store.import_values(r.head);
  CHECK(evaluate_extraction(dev, ex, head).corpus_f1 == doctest::Approx(r.best_dev_f1));

  // Same seed, same run.
  const auto again = finetune_boilerplate(train, dev, tiny_config(), nullptr, o);
  CHECK(again.log.back().train_loss == r.log.back().train_loss);

  // Pre-trained weights are loaded by name.
  const auto warm = finetune_boilerplate(train, dev, tiny_config(), &r.extractor, o);
  CHECK(warm.log.size() == 3);
  CHECK_THROWS_AS(finetune_boilerplate({}, dev, tiny_config(), nullptr, o), InvalidConfig);
}

TEST_CASE("boilerplate profiles") {
  const auto ce = boilerplate_profile("cleaneval");
  CHECK(ce.n_train == 53);
  CHECK(ce.n_dev == 5);
  CHECK(ce.options.lr == 0.002);
  CHECK(ce.options.weight_decay == 1e-4);
  CHECK(ce.dropout == 0.3);
  CHECK(ce.options.label_smoothing == 0.01);
  CHECK(ce.options.batch_nodes == 128);
  CHECK(ce.options.epochs == 40);
  const auto dn = boilerplate_profile("dragnet");
  CHECK(dn.n_train == 869);
  CHECK(dn.n_dev == 97);
  CHECK(dn.options.lr == 0.001);
  CHECK(dn.dropout == 0.0);
  CHECK_THROWS_AS(boilerplate_profile("nope"), InvalidConfig);
  const auto pp = pretrain_profile("pretrain-default");
  CHECK(pp.options.batch_pairs == 48);
  CHECK(pp.options.epochs == 80);
  CHECK(pp.dropout == 0.0);
}
