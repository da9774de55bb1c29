#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "doctest.h"
#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"
#include "grownup/graph/text_encoder.hpp"
#include "grownup/pretrain/pretrain.hpp"
#include "support/gradcheck.hpp"

using namespace grownup;
using namespace grownup::pretrain;
using testing::random_tensor;
using DT = nn::Tensor<double>;

namespace {

const graph::PageGraph& sample_page() {
  static const graph::PageGraph g = [] {
    graph::HashedNgramEncoder enc;
    return graph::featurize_html(
        "<html><body><div id=\"top\" class=\"nav bar\"><a href=\"/\">Home</a> <a href=\"/x\">News</a></div>"
        "<div class=\"main\"><h1>Title here</h1><p>First <b>bold</b> paragraph.</p><p>Second one.</p>"
        "<ul><li>a</li><li>b</li><li>c</li></ul></div><footer>bye</footer></body></html>",
        enc, graph::TagVocabulary::default_v1(), "sample");
  }();
  return g;
}

double naive_ce(const DT& p, const DT& y) {
  double s = 0;
  for (std::size_t i = 0; i < p.numel(); ++i) s -= y.at(i) * std::log(std::max(p.at(i), 1e-12));
  return s;
}

double naive_cosine_loss(const DT& x, const DT& y) {
  double s = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double d = 0, nx = 0, ny = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      d += x.at(r, c) * y.at(r, c);
      nx += x.at(r, c) * x.at(r, c);
      ny += y.at(r, c) * y.at(r, c);
    }
    s += 1 - (nx > 0 && ny > 0 ? d / std::sqrt(nx * ny) : 0.0);
  }
  return s;
}

DT row_vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return DT({1, n}, std::move(v));
}

// Head whose sim layer is the identity with zero bias, so x = tanh(readout).
void make_sim_identity(PretrainHeads<double>& h) {
  auto w = h.sim.W.values_mut();
  const std::size_t k = h.sim.W.rows();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i / k == i % k) ? 1.0 : 0.0;
  for (auto& b : h.sim.b->values_mut()) b = 0;
}

}  // namespace

TEST_CASE("selection picks min(M, N) distinct nodes") {
  const auto& g = sample_page();
  nn::Rng rng(1);
  for (std::size_t M : {std::size_t{1}, std::size_t{5}, g.n_nodes, g.n_nodes + 10}) {
    const auto mg = select_and_mask(g, M, rng);
    CHECK(mg.plan.selected.size() == std::min(M, g.n_nodes));
    std::set<std::uint32_t> uniq(mg.plan.selected.begin(), mg.plan.selected.end());
    CHECK(uniq.size() == mg.plan.selected.size());
    CHECK(mg.plan.masked.size() == mg.plan.selected.size());
    CHECK(mg.plan.truth.size() == mg.plan.selected.size());
  }
}

TEST_CASE("masking zeroes whole rows at the configured rate") {
  const auto& g = sample_page();
  nn::Rng rng(2);
  std::size_t masked = 0, total = 0;
  std::vector<std::size_t> picked(g.n_nodes, 0);
  while (total < 10000) {
    const auto mg = select_and_mask(g, 4, rng);
    for (std::size_t k = 0; k < mg.plan.selected.size(); ++k) {
      const auto node = mg.plan.selected[k];
      ++picked[node];
      const auto row = mg.graph.row(node);
      const bool zero = std::all_of(row.begin(), row.end(), [](float x) { return x == 0.0f; });
      if (mg.plan.masked[k]) {
        CHECK(zero);
      } else {
        const auto orig = g.row(node);
        CHECK(std::equal(row.begin(), row.end(), orig.begin()));
      }
      masked += mg.plan.masked[k];
      ++total;
    }
    // Rows that were not selected are untouched.
    std::set<std::uint32_t> sel(mg.plan.selected.begin(), mg.plan.selected.end());
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
      if (sel.count(static_cast<std::uint32_t>(i))) continue;
      const auto a = mg.graph.row(i), b = g.row(i);
      REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
  const double rate = static_cast<double>(masked) / static_cast<double>(total);
  const double sd = std::sqrt(0.85 * 0.15 / static_cast<double>(total));
  CHECK(std::abs(rate - 0.85) < 2.576 * sd);
  // Uniform selection: every node drawn roughly total / N times.
  const double expect = static_cast<double>(total) / static_cast<double>(g.n_nodes);
  for (auto c : picked) CHECK(std::abs(static_cast<double>(c) - expect) < 0.2 * expect);

  nn::Rng r0(3), r1(3);
  for (const auto& mg : {select_and_mask(g, 8, r0, 0.0), select_and_mask(g, 8, r1, 1.0)}) {
    const bool all_masked = std::all_of(mg.plan.masked.begin(), mg.plan.masked.end(), [](bool b) { return b; });
    const bool none = std::none_of(mg.plan.masked.begin(), mg.plan.masked.end(), [](bool b) { return b; });
    CHECK((all_masked || none));
  }
}

TEST_CASE("targets are the unmasked feature slices") {
  const auto& g = sample_page();
  nn::Rng rng(4);
  const auto mg = select_and_mask(g, g.n_nodes, rng, 1.0);
  for (std::size_t k = 0; k < mg.plan.selected.size(); ++k) {
    const auto node = mg.plan.selected[k];
    const auto row = g.row(node);
    const auto& t = mg.plan.truth[k];
    CHECK(std::memcmp(t.text.data(), &row[graph::offset::text], sizeof(float) * graph::kTextDim) == 0);
    CHECK(std::memcmp(t.klass.data(), &row[graph::offset::klass], sizeof(float) * graph::kTextDim) == 0);
    CHECK(std::memcmp(t.id.data(), &row[graph::offset::id], sizeof(float) * graph::kTextDim) == 0);
    CHECK(row[graph::offset::tag_type + t.tag] == 1.0f);
    CHECK(t.child == child_count_class(g.meta[node].num_children));
  }
  CHECK(child_count_class(0) == 0);
  CHECK(child_count_class(30) == 30);
  CHECK(child_count_class(31) == 31);
  CHECK(child_count_class(500) == 31);
}

TEST_CASE("cross-entropy and cosine loss against direct formulas") {
  nn::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(5), c = 2 + rng.index(6);
    const auto p = nn::softmax_rows(random_tensor({n, c}, rng));
    std::vector<std::size_t> cls(n);
    for (auto& k : cls) k = rng.index(c);
    const auto y = nn::one_hot<double>(cls, c);
    CHECK(cross_entropy(p, y).item() == doctest::Approx(naive_ce(p, y)).epsilon(1e-12));

    auto a = random_tensor({n, c}, rng), b = random_tensor({n, c}, rng);
    CHECK(cosine_loss(a, b).item() == doctest::Approx(naive_cosine_loss(a, b)).epsilon(1e-12));
  }
  const auto zero = DT::zeros({2, 3});
  CHECK(cosine_loss(zero, random_tensor({2, 3}, rng)).item() == doctest::Approx(2.0));
  const auto u = random_tensor({3, 4}, rng);
  CHECK(cosine_loss(u, u).item() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_loss(u, nn::scale(u, -1.0)).item() == doctest::Approx(6.0));
  // Zero probability is floored at 1e-12.
  CHECK(cross_entropy(row_vector({0.0, 1.0}), row_vector({1.0, 0.0})).item() ==
        doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("masked feature losses follow the per-node formula") {
  const auto& g = sample_page();
  nn::Rng rng(6);
  const std::size_t K = 6;
  PretrainHeads<double> heads(K, 0, 7);
  CHECK(heads.store.count() == (K + 1) * (84 + 32 + 3 * 512 + K));
  const auto mg = select_and_mask(g, 5, rng);
  const auto h = random_tensor({g.n_nodes, K}, rng);
  const auto L = masked_feature_losses(h, mg.plan, heads);

  double tag = 0, child = 0, text = 0;
  for (std::size_t k = 0; k < mg.plan.selected.size(); ++k) {
    const auto x = nn::slice_rows(h, mg.plan.selected[k], mg.plan.selected[k] + 1);
    const auto pt = nn::softmax_rows(heads.tag(x));
    tag -= std::log(pt.at(0, mg.plan.truth[k].tag));
    const auto pc = nn::softmax_rows(heads.child(x));
    child -= std::log(pc.at(0, mg.plan.truth[k].child));
    const auto tx = nn::tanh(heads.text(x));
    std::vector<double> tv(mg.plan.truth[k].text.begin(), mg.plan.truth[k].text.end());
    text += naive_cosine_loss(tx, row_vector(tv));
  }
  CHECK(L.tag.item() == doctest::Approx(tag).epsilon(1e-10));
  CHECK(L.child.item() == doctest::Approx(child).epsilon(1e-10));
  CHECK(L.text.item() == doctest::Approx(text).epsilon(1e-10));

  MaskPlan empty;
  CHECK(masked_feature_losses(h, empty, heads).tag.item() == 0.0);
}

TEST_CASE("same-site loss cases") {
  PretrainHeads<double> heads(2, 0, 8);
  make_sim_identity(heads);
  auto out = [](std::vector<double> v) { return model::ExtractorOutput<double>{row_vector(std::move(v)), {}}; };
  // Orthogonal embeddings: z clamps to 1e-7.
  const auto ortho = same_site_loss(out({1, 0}), out({0, 1}), 1, heads);
  CHECK(ortho.z == doctest::Approx(1e-7));
  CHECK(ortho.loss.item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  CHECK(ortho.loss.item() == doctest::Approx(16.118).epsilon(1e-4));
  CHECK(same_site_loss(out({1, 0}), out({0, 1}), 0, heads).loss.item() < 1e-6);
  // Opposite directions are cut to zero by the ReLU as well.
  CHECK(same_site_loss(out({1, 1}), out({-1, -1}), 1, heads).z == doctest::Approx(1e-7));
  // Identical embeddings: z = 1 - 1e-7.
  const auto same = same_site_loss(out({0.3, 0.4}), out({0.3, 0.4}), 0, heads);
  CHECK(same.z == doctest::Approx(1 - 1e-7));
  CHECK(same.loss.item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
  // A general angle.
  const double a = std::tanh(1.0), b = std::tanh(2.0), cos = a / std::sqrt(a * a + b * b);
  const auto mid = same_site_loss(out({1, 0}), out({1, 2}), 1, heads);
  CHECK(mid.z == doctest::Approx(cos).epsilon(1e-12));
  CHECK(mid.loss.item() == doctest::Approx(-std::log(cos)).epsilon(1e-12));

  // Mean readout averages node rows; CLS readout demands a CLS row.
  const auto two = model::ExtractorOutput<double>{DT({2, 2}, {1, 0, 1, 2}), {}};
  CHECK(same_site_loss(two, out({1, 1}), 1, heads).z == doctest::Approx(1 - 1e-7));
  CHECK_THROWS_AS(same_site_loss(two, two, 1, heads, Readout::Cls), InvalidConfig);
  const auto with_cls = model::ExtractorOutput<double>{DT({2, 2}, {1, 0, 1, 2}), row_vector({1, 0})};
  const auto other_cls = model::ExtractorOutput<double>{row_vector({1, 0}), row_vector({0, 1})};
  CHECK(same_site_loss(with_cls, other_cls, 1, heads, Readout::Cls).z == doctest::Approx(1e-7));
}

TEST_CASE("joint loss weights") {
  LossComponents unit{1, 2, 2, 2, 2, 2};
  CHECK(joint_loss(unit, LossWeights{}) == doctest::Approx(1.95));
  nn::Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    LossComponents a{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    LossComponents b{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const double s = rng.normal();
    LossComponents c{a.sim + s * b.sim, a.tag + s * b.tag, a.text + s * b.text,
                     a.id + s * b.id,   a.klass + s * b.klass, a.child + s * b.child};
    const LossWeights w;
    CHECK(joint_loss(c, w) == doctest::Approx(joint_loss(a, w) + s * joint_loss(b, w)).epsilon(1e-12));
  }
  auto sc = [](double v) { return DT::scalar(v); };
  MaskedLosses<double> la{sc(1), sc(2), sc(3), sc(4), sc(5)}, lb{sc(0.5), sc(0.5), sc(0.5), sc(0.5), sc(0.5)};
  const LossComponents parts{7, 1.5, 3.5, 5.5, 4.5, 2.5};
  CHECK(joint_loss(sc(7), la, lb, LossWeights{}).item() == doctest::Approx(joint_loss(parts, LossWeights{})));
}

TEST_CASE("pair permutation") {
  std::vector<std::string> site_of;
  for (int s = 0; s < 6; ++s)
    for (int p = 0; p < 5; ++p) site_of.push_back("s" + std::to_string(s));
  nn::Rng rng(10);
  for (std::size_t B : {2u, 3u, 7u, 12u}) {
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<PagePair> batch;
      for (std::size_t i = 0; i < B; ++i) {
        const std::size_t site = i % 6, a = site * 5 + rng.index(5);
        std::size_t b = a;
        while (b == a) b = site * 5 + rng.index(5);
        batch.push_back({a, b, 1});
      }
      if (B == 2) batch[1] = {5, 6, 1};
      const auto out = permute_pairs(batch, site_of, rng);
      REQUIRE(out.size() == B);
      std::size_t pos = 0;
      for (std::size_t i = 0; i < B; ++i) {
        CHECK(out[i].a == batch[i].a);
        if (out[i].label == 1) {
          ++pos;
          CHECK(out[i].b == batch[i].b);
        } else {
          CHECK(site_of[out[i].b] != site_of[out[i].a]);
        }
      }
      CHECK(pos == B / 2);
    }
  }
  std::vector<PagePair> one_site{{0, 1, 1}, {1, 2, 1}, {3, 4, 1}};
  CHECK_THROWS_AS(permute_pairs(one_site, site_of, rng), SingleSiteBatch);
}

TEST_CASE("head and same-site gradients match finite differences") {
  const auto& g = sample_page();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::Rng rng(100 + seed);
    const std::size_t K = 3;
    PretrainHeads<double> heads(K, 4, seed);
    const auto mg = select_and_mask(g, 3, rng);
    auto h = random_tensor({g.n_nodes, K}, rng);
    auto a = random_tensor({3, K}, rng), b = random_tensor({2, K}, rng);
    std::vector<DT> wrt{h, a, b};
    // The 512-wide heads are costly to difference; cover them on two seeds.
    for (const auto& [name, t] : heads.store.entries())
      if (seed < 2 || t.cols() != graph::kTextDim) wrt.push_back(t);
    const int y = static_cast<int>(seed % 2);
    auto loss = [&] {
      const auto m = masked_feature_losses(h, mg.plan, heads);
      const auto s = same_site_loss(model::ExtractorOutput<double>{a, {}}, model::ExtractorOutput<double>{b, {}}, y,
                                    heads);
      return joint_loss(s.loss, m, m, LossWeights{});
    };
    const auto r = testing::check_gradients(loss, wrt, 1e-6, 1e-4);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("site-stratified dev split") {
  std::vector<std::string> site_of;
  for (int s = 0; s < 10; ++s)
    for (int p = 0; p < 10; ++p) site_of.push_back("site" + std::to_string(s));
  nn::Rng rng(11);
  const auto [train, dev] = split_by_site(site_of, 0.1, rng);
  CHECK(train.size() == 90);
  CHECK(dev.size() == 10);
  std::map<std::string, int> dev_sites;
  for (auto d : dev) ++dev_sites[site_of[d]];
  CHECK(dev_sites.size() == 10);
  std::set<std::size_t> all(train.begin(), train.end());
  for (auto d : dev) CHECK(all.insert(d).second);
  CHECK(all.size() == 100);

  // Small sites keep at least two train pages.
  std::vector<std::string> small{"a", "a", "b", "b", "b"};
  const auto [t2, d2] = split_by_site(small, 0.5, rng);
  // Only site b can give a page, and a one-site dev set has no negatives.
  CHECK(d2.empty());
  CHECK(t2.size() == 5);

  // A single requested dev page becomes one page from each of two sites.
  std::vector<std::string> two{"a", "a", "a", "b", "b", "b"};
  const auto [t3, d3] = split_by_site(two, 0.1, rng);
  REQUIRE(d3.size() == 2);
  CHECK(two[d3[0]] != two[d3[1]]);
  CHECK(site_of.size() == 100);
}

TEST_CASE("pre-training smoke run") {
  const auto synth = corpus::synth_site_corpus(24, 4, 12);
  graph::HashedNgramEncoder enc;
  std::vector<graph::PageGraph> pages;
  std::vector<std::string> site_of;
  for (const auto& p : synth) {
    pages.push_back(graph::featurize_html(p.html, enc, graph::TagVocabulary::default_v1(), p.page_id));
    site_of.push_back(p.site_key);
  }
  model::ModelConfig cfg;
  cfg.S = 1, cfg.T = 1, cfg.K = 16, cfg.N_h = 2, cfg.dropout = 0.0;
  PretrainOptions o;
  o.epochs = 4, o.batch_pairs = 6, o.M = 4, o.lr = 3e-3, o.seed = 5, o.dev_fraction = 0.2;
  std::size_t calls = 0;
  const auto r = pretrain_run(pages, site_of, cfg, o, [&](const EpochLog&) { ++calls; });
  CHECK(calls == 4);
  REQUIRE(r.log.size() == 4);
  CHECK(r.train_pages.size() + r.dev_pages.size() == 24);
  CHECK(r.dev_pages.size() == 5);
  for (const auto& e : r.log) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(std::isfinite(e.dev_loss));
    CHECK(e.dev_accuracy >= 0.0);
    CHECK(e.dev_accuracy <= 1.0);
  }
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_dev_loss == r.log[r.best_epoch - 1].dev_loss);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
  CHECK(!r.best_extractor.empty());

  // Deterministic under a fixed seed.
  const auto again = pretrain_run(pages, site_of, cfg, o);
  CHECK(again.log.back().train_loss == r.log.back().train_loss);

  o.readout = Readout::Cls;
  cfg.T = 0;
  CHECK_THROWS_AS(pretrain_run(pages, site_of, cfg, o), InvalidConfig);
}
