#include "grownup/graph/laplacian.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "grownup/errors.hpp"

namespace grownup::graph {

namespace {

std::vector<UndirectedEdge> canonical_edges(std::size_t n, std::span<const UndirectedEdge> edges) {
  std::vector<UndirectedEdge> out;
  out.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw ShapeMismatch("edge endpoint out of range");
    if (a == b) continue;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::size_t count_components(std::size_t n, std::span<const UndirectedEdge> edges) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::size_t components = n;
  for (auto [a, b] : edges) {
    const std::size_t ra = find_root(parent, a), rb = find_root(parent, b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components;
}

LaplacianPe laplacian_pe_from_edges(std::size_t n, std::span<const UndirectedEdge> edges, std::size_t dim) {
  LaplacianPe pe;
  pe.rows = n;
  pe.cols = dim;
  pe.values.assign(n * dim, 0.0);
  const auto es = canonical_edges(n, edges);
  const std::size_t trivial = count_components(n, es);
  const std::size_t take = std::min(dim, n - std::min(n, trivial));
  if (take == 0) return pe;

  std::vector<double> degree(n, 0.0);
  for (auto [a, b] : es) {
    degree[a] += 1;
    degree[b] += 1;
  }
  // Column-major dense Laplacian; isolated nodes get a zero diagonal.
  std::vector<double> lap(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) lap[i * n + i] = degree[i] > 0 ? 1.0 : 0.0;
  for (auto [a, b] : es) {
    const double w = -1.0 / std::sqrt(degree[a] * degree[b]);
    lap[static_cast<std::size_t>(a) * n + b] = w;
    lap[static_cast<std::size_t>(b) * n + a] = w;
  }

  const auto N = static_cast<lapack_int>(n);
  const auto il = static_cast<lapack_int>(trivial + 1);
  const auto iu = static_cast<lapack_int>(trivial + take);
  lapack_int found = 0;
  std::vector<double> w(n);
  std::vector<double> z(n * take);
  std::vector<lapack_int> support(2 * take);
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', N, lap.data(), N, 0.0, 0.0, il, iu,
                                         0.0, &found, w.data(), z.data(), N, support.data());
  if (info != 0 || static_cast<std::size_t>(found) != take) {
    throw Error("Laplacian eigensolver failed (info " + std::to_string(info) + ")");
  }
  pe.eigenvalues.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t c = 0; c < take; ++c) {
    const double* col = z.data() + c * n;
    double max_abs = 0;
    for (std::size_t i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(col[i]));
    double sign = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(col[i]) >= max_abs - 1e-9) {
        sign = col[i] < 0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) pe.values[i * dim + c] = sign * col[i];
  }
  return pe;
}

}  // namespace grownup::graph
