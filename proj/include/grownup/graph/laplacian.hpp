#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace grownup::graph {

struct LaplacianPe {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;       // row-major rows x cols
  std::vector<double> eigenvalues;  // one per non-padded column, ascending
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

using UndirectedEdge = std::pair<std::uint32_t, std::uint32_t>;

/// Eigenvectors of the symmetric normalized Laplacian I - D^-1/2 A D^-1/2 of
/// an undirected graph (self-loops and duplicate edges ignored). The trivial
/// eigenvectors (one zero eigenvalue per connected component) are skipped;
/// the next `dim` columns are returned in ascending eigenvalue order and the
/// remainder zero-padded. Each column's first entry of largest magnitude is
/// made positive.
LaplacianPe laplacian_pe_from_edges(std::size_t n, std::span<const UndirectedEdge> edges,
                                    std::size_t dim = 32);

/// Number of connected components.
std::size_t count_components(std::size_t n, std::span<const UndirectedEdge> edges);

}  // namespace grownup::graph
