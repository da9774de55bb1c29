#include <cmath>
#include <set>

#include "doctest.h"
#include "grownup/errors.hpp"
#include "grownup/model/layers.hpp"
#include "support/gradcheck.hpp"
#include "support/graph_oracles.hpp"

using namespace grownup;
using namespace grownup::model;
using nn::Rng;
using testing::random_tensor;

namespace {

using testing::Mat;
using testing::edges_from;
using testing::naive_gcg;
using testing::random_adjacency;
using testing::to_mat;

std::vector<double> vec_of(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }

Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_close(const Mat& a, const Tensor<double>& t, double tol) {
  REQUIRE(a.size() == t.rows());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].size() == t.cols());
    for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(std::abs(a[i][j] - t.at(i, j)) < tol);
  }
}

}  // namespace

TEST_CASE("gated graph convolution matches the per-edge formula") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.index(6), in_w = 1 + rng.index(5), out_w = 1 + rng.index(5);
    nn::ParameterStore<double> store;
    const auto w = GraphConvGatedWeights<double>::make(store, "g", in_w, out_w, rng);
    for (auto& b : w.b)
      for (auto& v : Tensor<double>(b).values_mut()) v = rng.uniform(-1, 1);
    const auto a = random_adjacency(n, rng);
    const auto x = random_tensor({n, in_w}, rng);
    check_close(naive_gcg(to_mat(x), a, w), graph_conv_gated(x, edges_from(a), w), 1e-5);
  }
}

TEST_CASE("gated graph convolution trivial cases") {
  Rng rng(3);
  nn::ParameterStore<double> store;
  auto w = GraphConvGatedWeights<double>::make(store, "g", 3, 3, rng);
  for (auto& [name, t] : store.entries())
    for (auto& v : Tensor<double>(t).values_mut()) v = 0.0;
  const auto x = random_tensor({4, 3}, rng);
  EdgeSet full;
  for (auto& e : full)
    for (std::uint32_t i = 0; i < 4; ++i)
      for (std::uint32_t j = 0; j < 4; ++j) e.src.push_back(i), e.dst.push_back(j);
  const auto zero = graph_conv_gated(x, full, w);
  for (double v : zero.values()) CHECK(v == 0.0);

  // One node, self edge, W = I, B = C = 0 -> half the input.
  auto id = Tensor<double>(w.W[2]).values_mut();
  for (std::size_t d = 0; d < 3; ++d) id[d * 3 + d] = 1.0;
  EdgeSet self;
  self[2] = {{0}, {0}};
  const auto one = random_tensor({1, 3}, rng);
  const auto out = graph_conv_gated(one, self, w);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(0, c) == doctest::Approx(0.5 * one.at(0, c)));

  CHECK_THROWS_AS(graph_conv_gated(random_tensor({2, 4}, rng), self, w), ShapeMismatch);
}

TEST_CASE("edge gates stay strictly inside (0, 1)") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor({5, 4}, rng, 3.0);
    const auto b = random_tensor({4, 4}, rng);
    const auto c = random_tensor({4, 4}, rng);
    const std::vector<std::uint32_t> src{0, 1, 2, 3, 4}, dst{1, 2, 3, 4, 0};
    const auto gate = nn::sigmoid(nn::add(nn::gather_rows(nn::matmul(x, b), std::span<const std::uint32_t>(src)),
                                          nn::gather_rows(nn::matmul(x, c), std::span<const std::uint32_t>(dst))));
    for (double g : gate.values()) {
      CHECK(g > 0.0);
      CHECK(g < 1.0);
    }
  }
}

TEST_CASE("linear layer") {
  Rng rng(5);
  nn::ParameterStore<double> store;
  const auto lin = Linear<double>::make(store, "l", 3, 4, rng);
  for (auto& v : Tensor<double>(*lin.b).values_mut()) v = rng.uniform(-1, 1);
  const auto x = random_tensor({2, 3}, rng);
  auto expected = matmul(to_mat(x), to_mat(lin.W));
  for (auto& row : expected)
    for (std::size_t j = 0; j < 4; ++j) row[j] += lin.b->at(j);
  check_close(expected, lin(x), 1e-12);

  auto w = Tensor<double>(lin.W).values_mut();
  std::fill(w.begin(), w.end(), 0.0);
  const auto y = lin(x);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(y.at(i, j) == lin.b->at(j));

  const auto sq = Linear<double>::make(store, "sq", 3, 3, rng, false);
  auto sw = Tensor<double>(sq.W).values_mut();
  for (std::size_t i = 0; i < 9; ++i) sw[i] = i % 4 == 0 ? 1.0 : 0.0;
  CHECK(vec_of(sq(x)) == vec_of(x));
  CHECK_THROWS_AS(lin(random_tensor({2, 5}, rng)), ShapeMismatch);
  CHECK_FALSE(sq.b.has_value());
}

TEST_CASE("multi-head attention matches the dense formula") {
  Rng rng(8);
  nn::ParameterStore<double> store;
  const std::size_t in = 4, width = 4, heads = 2;
  const auto w = AttentionWeights<double>::make(store, "a", in, width, heads, rng);
  const auto h = random_tensor({3, in}, rng);
  const auto hm = to_mat(h);
  Mat expected(3);
  for (std::size_t head = 0; head < heads; ++head) {
    const auto q = matmul(hm, to_mat(w.Wq[head])), k = matmul(hm, to_mat(w.Wk[head])),
               v = matmul(hm, to_mat(w.Wv[head]));
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<double> s(3);
      double mx = -1e300, z = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t d = 0; d < q[0].size(); ++d) s[j] += q[i][d] * k[j][d];
        s[j] /= std::sqrt(static_cast<double>(in));
        mx = std::max(mx, s[j]);
      }
      for (auto& x : s) z += (x = std::exp(x - mx));
      for (std::size_t d = 0; d < v[0].size(); ++d) {
        double acc = 0;
        for (std::size_t j = 0; j < 3; ++j) acc += s[j] / z * v[j][d];
        expected[i].push_back(acc);
      }
    }
  }
  check_close(expected, multihead_attention(h, w), 1e-12);

  SUBCASE("a single row attends only to itself") {
    const auto one = random_tensor({1, in}, rng);
    const auto out = multihead_attention(one, w);
    const auto v0 = matmul(to_mat(one), to_mat(w.Wv[0])), v1 = matmul(to_mat(one), to_mat(w.Wv[1]));
    check_close({{v0[0][0], v0[0][1], v1[0][0], v1[0][1]}}, out, 1e-12);
  }
  SUBCASE("identical rows give identical outputs") {
    auto rows = random_tensor({3, in}, rng);
    auto v = rows.values_mut();
    for (std::size_t d = 0; d < in; ++d) v[2 * in + d] = v[d];
    const auto out = multihead_attention(rows, w);
    for (std::size_t d = 0; d < width; ++d) CHECK(out.at(0, d) == out.at(2, d));
  }
  CHECK_THROWS_AS(AttentionWeights<double>::make(store, "bad", 4, 6, 4, rng), InvalidConfig);
}

TEST_CASE("transformer block composes pre-norm attention and feed-forward") {
  Rng rng(9);
  nn::ParameterStore<double> store;
  const auto tf = TransformerWeights<double>::make(store, "tf", 4, 2, rng);
  const auto h = random_tensor({3, 4}, rng);
  const auto a = nn::add(h, tf.out(multihead_attention(tf.ln1(h), tf.attention)));
  const auto expected = nn::add(a, tf.ff2(nn::relu(tf.ff1(tf.ln2(a)))));
  CHECK(vec_of(transformer_block(h, tf)) == vec_of(expected));
  CHECK(tf.ff1.W.shape() == nn::Shape{4, 16});
  CHECK(tf.ff2.W.shape() == nn::Shape{16, 4});
}

TEST_CASE("LSTM step matches the gate equations") {
  Rng rng(12);
  nn::ParameterStore<double> store;
  const std::size_t k = 3;
  const auto w = LstmWeights<double>::make(store, "lstm", k, rng);
  CHECK(w.b.at(k) == 1.0);
  CHECK(w.b.at(0) == 0.0);
  const auto x = random_tensor({2, k}, rng);
  LstmState<double> st{random_tensor({2, k}, rng), random_tensor({2, k}, rng)};
  const auto out = lstm_step(x, st, w);
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<double> z(4 * k);
    for (std::size_t c = 0; c < 4 * k; ++c) {
      z[c] = w.b.at(c);
      for (std::size_t d = 0; d < k; ++d) z[c] += x.at(r, d) * w.W_ih.at(d, c) + st.h.at(r, d) * w.W_hh.at(d, c);
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double i = sigmoid(z[c]), f = sigmoid(z[k + c]), g = std::tanh(z[2 * k + c]), o = sigmoid(z[3 * k + c]);
      const double cell = f * st.c.at(r, c) + i * g;
      CHECK(out.c.at(r, c) == doctest::Approx(cell).epsilon(1e-12));
      CHECK(out.h.at(r, c) == doctest::Approx(o * std::tanh(cell)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(lstm_step(random_tensor({2, 4}, rng), st, w), ShapeMismatch);
}

TEST_CASE("block skips: identity when widths match, projection otherwise") {
  Rng rng(13);
  nn::ParameterStore<double> store;
  const auto same = LinearBlock<double>::make(store, "same", 4, 4, rng);
  const auto wide = LinearBlock<double>::make(store, "wide", 3, 4, rng);
  CHECK_FALSE(same.skip.has_value());
  REQUIRE(wide.skip.has_value());
  CHECK_FALSE(wide.skip->b.has_value());
  const auto x = random_tensor({2, 3}, rng);
  const auto y = wide(x);
  const auto expected = nn::relu(nn::add((*wide.skip)(x), wide.norm2(wide.lin2(nn::relu(wide.norm1(wide.lin1(x)))))));
  CHECK(vec_of(y) == vec_of(expected));
  std::set<std::string> names;
  for (const auto& [name, t] : store.entries()) names.insert(name);
  CHECK(names.count("wide.skip.W") == 1);
  CHECK(names.count("same.norm1.gain") == 1);
}
