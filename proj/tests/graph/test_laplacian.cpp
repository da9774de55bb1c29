#include <cmath>

#include "doctest.h"
#include "grownup/graph/laplacian.hpp"
#include "grownup/nn/rng.hpp"
#include "support/jacobi.hpp"

using namespace grownup;
using namespace grownup::graph;

namespace {

// Orthogonal projector onto the span of the given columns of `pe`.
std::vector<std::vector<double>> projector(const LaplacianPe& pe, std::size_t c0, std::size_t c1) {
  std::vector<std::vector<double>> p(pe.rows, std::vector<double>(pe.rows, 0.0));
  for (std::size_t c = c0; c < c1; ++c)
    for (std::size_t i = 0; i < pe.rows; ++i)
      for (std::size_t j = 0; j < pe.rows; ++j) p[i][j] += pe.at(i, c) * pe.at(j, c);
  return p;
}

double column_norm(const LaplacianPe& pe, std::size_t c) {
  double s = 0;
  for (std::size_t i = 0; i < pe.rows; ++i) s += pe.at(i, c) * pe.at(i, c);
  return std::sqrt(s);
}

bool column_is_zero(const LaplacianPe& pe, std::size_t c) {
  for (std::size_t i = 0; i < pe.rows; ++i)
    if (pe.at(i, c) != 0.0) return false;
  return true;
}

std::vector<UndirectedEdge> random_tree(std::size_t n, nn::Rng& rng) {
  std::vector<UndirectedEdge> es;
  for (std::size_t i = 1; i < n; ++i)
    es.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(rng.index(i)));
  return es;
}

}  // namespace

TEST_CASE("complete graph K4") {
  std::vector<UndirectedEdge> k4;
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = a + 1; b < 4; ++b) k4.emplace_back(a, b);
  const auto pe = laplacian_pe_from_edges(4, k4, 32);
  const auto oracle = testing::jacobi_eigen(testing::normalized_laplacian(4, k4));
  CHECK(oracle.values[0] == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(pe.eigenvalues.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(oracle.values[k + 1] == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK(pe.eigenvalues[k] == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  }
  // The 4/3 eigenspace is degenerate, so compare subspaces, not vectors.
  const auto p = projector(pe, 0, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double q = 0;
      for (std::size_t k = 1; k < 4; ++k) q += oracle.vectors[k][i] * oracle.vectors[k][j];
      CHECK(p[i][j] == doctest::Approx(q).epsilon(1e-9).scale(1.0));
    }
  for (std::size_t c = 3; c < 32; ++c) CHECK(column_is_zero(pe, c));
}

TEST_CASE("single node has an all-zero encoding") {
  const auto pe = laplacian_pe_from_edges(1, {}, 32);
  CHECK(pe.rows == 1);
  CHECK(pe.eigenvalues.empty());
  for (std::size_t c = 0; c < 32; ++c) CHECK(pe.at(0, c) == 0.0);
}

TEST_CASE("path graph P3") {
  const std::vector<UndirectedEdge> p3 = {{0, 1}, {1, 2}};
  const auto pe = laplacian_pe_from_edges(3, p3, 32);
  const auto oracle = testing::jacobi_eigen(testing::normalized_laplacian(3, p3));
  REQUIRE(pe.eigenvalues.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(pe.eigenvalues[k] == doctest::Approx(oracle.values[k + 1]).epsilon(1e-10));
    CHECK(column_norm(pe, k) == doctest::Approx(1.0).epsilon(1e-12));
    // Non-degenerate: columns equal the oracle's up to sign.
    double dot = 0;
    for (std::size_t i = 0; i < 3; ++i) dot += pe.at(i, k) * oracle.vectors[k + 1][i];
    CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(pe.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(pe.eigenvalues[1] == doctest::Approx(2.0));
  for (std::size_t c = 2; c < 32; ++c) CHECK(column_is_zero(pe, c));
}

TEST_CASE("sign convention: first entry of largest magnitude is positive") {
  nn::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(40);
    const auto pe = laplacian_pe_from_edges(n, random_tree(n, rng), 32);
    for (std::size_t c = 0; c < pe.eigenvalues.size(); ++c) {
      double max_abs = 0;
      for (std::size_t i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(pe.at(i, c)));
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(pe.at(i, c)) >= max_abs - 1e-9) {
          CHECK(pe.at(i, c) > 0);
          break;
        }
      }
    }
  }
}

TEST_CASE("non-padded columns are orthonormal and match the oracle spectrum") {
  nn::Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    const auto edges = random_tree(n, rng);
    const auto pe = laplacian_pe_from_edges(n, edges, 32);
    const auto oracle = testing::jacobi_eigen(testing::normalized_laplacian(n, edges));
    const std::size_t take = std::min<std::size_t>(32, n - 1);
    REQUIRE(pe.eigenvalues.size() == take);
    for (std::size_t k = 0; k < take; ++k)
      CHECK(pe.eigenvalues[k] == doctest::Approx(oracle.values[k + 1]).epsilon(1e-8).scale(1.0));
    for (std::size_t a = 0; a < take; ++a)
      for (std::size_t b = a; b < take; ++b) {
        double dot = 0;
        for (std::size_t i = 0; i < n; ++i) dot += pe.at(i, a) * pe.at(i, b);
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-6);
      }
    for (std::size_t c = take; c < 32; ++c) CHECK(column_is_zero(pe, c));
  }
}

TEST_CASE("relabeling nodes permutes rows (up to column sign)") {
  nn::Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.index(40);
    const auto edges = random_tree(n, rng);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(perm);
    std::vector<UndirectedEdge> relabeled;
    for (auto [a, b] : edges) relabeled.emplace_back(perm[a], perm[b]);
    const auto pe = laplacian_pe_from_edges(n, edges, 32);
    const auto pp = laplacian_pe_from_edges(n, relabeled, 32);
    for (std::size_t c = 0; c < pe.eigenvalues.size(); ++c) {
      // Only simple eigenvalues determine their eigenvector up to sign.
      const double gap_lo = c == 0 ? 1.0 : pe.eigenvalues[c] - pe.eigenvalues[c - 1];
      const double gap_hi = c + 1 < pe.eigenvalues.size() ? pe.eigenvalues[c + 1] - pe.eigenvalues[c] : 1.0;
      if (std::min(gap_lo, gap_hi) < 1e-6) continue;
      double dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += pe.at(i, c) * pp.at(perm[i], c);
      const double sign = dot < 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(pe.at(i, c) - sign * pp.at(perm[i], c)) < 1e-6);
    }
  }
}

TEST_CASE("disconnected graphs skip one trivial vector per component") {
  const std::vector<UndirectedEdge> two_paths = {{0, 1}, {2, 3}, {3, 4}};
  CHECK(count_components(5, two_paths) == 2);
  const auto pe = laplacian_pe_from_edges(5, two_paths, 32);
  CHECK(pe.eigenvalues.size() == 3);
  CHECK(pe.eigenvalues[0] > 1e-9);
}
