#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"
#include "grownup/graph/text_encoder.hpp"
#include "grownup/tasks/genre.hpp"
#include "grownup/tasks/profiles.hpp"
#include "support/gradcheck.hpp"

using namespace grownup;
using namespace grownup::tasks;
using DT = nn::Tensor<double>;

namespace {

void set_identity(GenreHead<double>& h) {
  auto w = h.W.values_mut();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i / h.W.cols() == i % h.W.cols()) ? 1.0 : 0.0;
}

// theta_c from explicit vector algebra.
std::vector<double> angles(const DT& e, std::size_t row, const DT& W) {
  std::vector<double> out;
  double ne = 0;
  for (std::size_t k = 0; k < e.cols(); ++k) ne += e.at(row, k) * e.at(row, k);
  for (std::size_t c = 0; c < W.cols(); ++c) {
    double d = 0, nw = 0;
    for (std::size_t k = 0; k < e.cols(); ++k) {
      d += e.at(row, k) * W.at(k, c);
      nw += W.at(k, c) * W.at(k, c);
    }
    out.push_back(std::acos(std::clamp(d / std::sqrt(ne * nw), -1.0, 1.0)));
  }
  return out;
}

}  // namespace

TEST_CASE("Li-ArcFace logits at known angles") {
  GenreHead<double> head(3, 3, 1, 5.0, 0.0);
  set_identity(head);
  const auto l = genre_logits(DT({1, 3}, {2, 0, 0}), head);
  CHECK(l.at(0) == doctest::Approx(5.0).epsilon(1e-5));
  CHECK(std::abs(l.at(1)) < 1e-9);
  CHECK(std::abs(l.at(2)) < 1e-9);
  const auto opposite = genre_logits(DT({1, 3}, {-1, 0, 0}), head);
  CHECK(opposite.at(0) == doctest::Approx(-5.0).epsilon(1e-5));
  CHECK_THROWS_AS(genre_logits(DT({1, 3}, {0, 0, 0}), head), ZeroEmbedding);
  CHECK_THROWS_AS((GenreHead<double>(3, 3, 1, 0.0, 0.3)), InvalidConfig);
  CHECK_THROWS_AS((GenreHead<double>(3, 3, 1, 5.0, 1.6)), InvalidConfig);
}

TEST_CASE("Li-ArcFace logits match the angle formula") {
  nn::Rng rng(2);
  const double pi = std::numbers::pi;
  for (int trial = 0; trial < 20; ++trial) {
    GenreHead<double> head(4, 3, trial, 5.0, 0.3);
    const auto e = testing::random_tensor({2, 4}, rng);
    const std::vector<std::size_t> y{rng.index(3), rng.index(3)};
    const auto plain = genre_logits(e, head);
    const auto margin = genre_logits(e, head, &y);
    for (std::size_t r = 0; r < 2; ++r) {
      const auto th = angles(e, r, head.W);
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(plain.at(r, c) == doctest::Approx(5.0 * (pi - 2 * th[c]) / pi).epsilon(1e-9));
        const double t = c == y[r] ? th[c] + 0.3 : th[c];
        CHECK(margin.at(r, c) == doctest::Approx(5.0 * (pi - 2 * t) / pi).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("genre predictions ignore embedding scale and follow cosine ranking") {
  nn::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    GenreHead<double> head(5, 4, trial, 1.0, 0.0);
    const auto e = testing::random_tensor({1, 5}, rng);
    const auto l = genre_logits(e, head);
    const auto l2 = genre_logits(nn::scale(e, 7.5), head);
    const auto th = angles(e, 0, head.W);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(l2.at(c) == doctest::Approx(l.at(c)).epsilon(1e-9));
      for (std::size_t d = 0; d < 4; ++d)
        if (th[c] < th[d]) CHECK(l.at(c) > l.at(d));
    }
  }
}

TEST_CASE("genre loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::Rng rng(seed + 50);
    GenreHead<double> head(4, 3, seed, 5.0, 0.3);
    auto e = testing::random_tensor({3, 4}, rng);
    const std::vector<std::size_t> y{rng.index(3), rng.index(3), rng.index(3)};
    const auto r = testing::check_gradients([&] { return genre_loss(e, head, y); }, {e, head.W}, 1e-6, 1e-4);
    CHECK(r.checked == 12 + 12);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("stratified folds partition the data") {
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 1400; ++i) labels.push_back(i % 7);
  const auto spec = stratified_folds(labels, 7, 10, 4);
  REQUIRE(spec.folds.size() == 10);
  std::set<std::size_t> seen;
  for (const auto& f : spec.folds) {
    CHECK(f.size() == 140);
    std::vector<std::size_t> per(7, 0);
    for (auto i : f) {
      CHECK(seen.insert(i).second);
      ++per[labels[i]];
    }
    for (auto c : per) CHECK(c == 20);
  }
  CHECK(seen.size() == 1400);
  CHECK(stratified_folds(labels, 7, 10, 5).folds != spec.folds);
  CHECK(stratified_folds(labels, 7, 10, 4).folds == spec.folds);

  std::vector<std::size_t> small{0, 0, 0, 1, 1};
  CHECK_THROWS_AS(stratified_folds(small, 2, 3, 1), ClassTooSmall);
  // Uneven class sizes still give near-equal folds.
  std::vector<std::size_t> uneven;
  for (std::size_t i = 0; i < 1209; ++i) uneven.push_back(i % 8 == 0 ? 0 : i % 8);
  for (const auto& f : stratified_folds(uneven, 8, 10, 6).folds) CHECK((f.size() == 120 || f.size() == 121));
}

TEST_CASE("cross-validation mechanics") {
  const auto data = corpus::synth_genre_corpus(12, 3, 7);
  graph::HashedNgramEncoder enc;
  std::vector<graph::PageGraph> pages;
  std::vector<std::size_t> labels;
  for (const auto& p : data.pages) {
    pages.push_back(graph::featurize_html(p.html, enc));
    labels.push_back(p.label);
  }
  model::ModelConfig cfg;
  cfg.S = 1, cfg.T = 1, cfg.K = 8, cfg.N_h = 2, cfg.dropout = 0.1;
  GenreOptions o;
  o.epochs = 2, o.batch_pages = 4, o.seed = 3;
  std::size_t calls = 0;
  const auto r = kfold_cv(pages, labels, 3, cfg, nullptr, o, 2, 2, [&](const FoldResult&) { ++calls; });
  CHECK(calls == 4);
  REQUIRE(r.folds.size() == 4);
  for (const auto& f : r.folds) {
    CHECK(f.n_train + f.n_test == 12);
    CHECK(f.accuracy >= 0.0);
    CHECK(f.accuracy <= 1.0);
  }
  CHECK(r.accuracies().size() == 4);
  const auto again = kfold_cv(pages, labels, 3, cfg, nullptr, o, 2, 2);
  CHECK(again.accuracies() == r.accuracies());

  cfg.T = 0;
  CHECK_THROWS_AS(kfold_cv(pages, labels, 3, cfg, nullptr, o, 2, 1), InvalidConfig);
  o.readout = Readout::Mean;
  CHECK(kfold_cv(pages, labels, 3, cfg, nullptr, o, 2, 1).folds.size() == 2);
  CHECK_THROWS_AS(kfold_cv(pages, labels, 3, cfg, nullptr, o, 5, 1), ClassTooSmall);
}

TEST_CASE("genre profiles") {
  for (const char* name : {"7web", "ki04"}) {
    const auto p = genre_profile(name);
    CHECK(p.options.lr == 0.002);
    CHECK(p.options.restart_t0 == 5);
    CHECK(p.options.scale == 5.0);
    CHECK(p.options.margin == 0.3);
    CHECK(p.options.epochs == 35);
    CHECK(p.dropout == 0.3);
    CHECK(p.model.dropout == 0.3);
    CHECK(p.n_folds == 10);
    CHECK(p.repeats == 3);
    CHECK(p.model.S == 5);
    CHECK(p.model.T == 5);
  }
  CHECK(genre_profile("7web").n_classes == 7);
  CHECK(genre_profile("7web").n_pages == 1400);
  CHECK(genre_profile("ki04").n_classes == 8);
  CHECK(genre_profile("ki04").n_pages == 1209);
  CHECK_THROWS_AS(genre_profile("cleaneval"), InvalidConfig);
}
