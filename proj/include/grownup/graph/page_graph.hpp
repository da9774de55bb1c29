#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grownup/graph/fonts.hpp"
#include "grownup/graph/laplacian.hpp"
#include "grownup/graph/schema.hpp"
#include "grownup/graph/text_encoder.hpp"
#include "grownup/html/dom.hpp"

namespace grownup::graph {

/// For edge (src, dst) of type Parent, dst is the parent of src; Child is the
/// reverse relation and Self holds (i, i) for every node.
enum class EdgeType : std::uint8_t { Parent = 0, Child = 1, Self = 2 };
inline constexpr std::size_t kEdgeTypes = 3;

struct Edge {
  std::uint32_t src;
  std::uint32_t dst;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct NodeMeta {
  std::string tag;
  bool has_text = false;
  std::string text;
  html::SourceSpan span;
  std::uint32_t num_children = 0;
  bool operator==(const NodeMeta& o) const {
    return tag == o.tag && has_text == o.has_text && text == o.text && span.begin == o.span.begin &&
           span.end == o.span.end && num_children == o.num_children;
  }
};

/// One page: N feature rows in pre-order (root first) plus typed edges.
/// Immutable after construction and safe to share across threads.
struct PageGraph {
  std::string page_id;
  std::uint64_t schema = 0;
  std::size_t n_nodes = 0;
  std::vector<float> features;  // row-major n_nodes x kFeatureWidth
  std::array<std::vector<Edge>, kEdgeTypes> edges;  // each sorted
  std::vector<NodeMeta> meta;

  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * kFeatureWidth, kFeatureWidth};
  }
  const std::vector<Edge>& edges_of(EdgeType k) const { return edges[static_cast<std::size_t>(k)]; }
  bool has_edge(EdgeType k, std::uint32_t src, std::uint32_t dst) const;
  /// Parent node id per node, -1 for the root.
  std::vector<std::int64_t> parents() const;
};

/// Assembles features and adjacency for the tree under `root`.
PageGraph build_graph(const html::DomNode& root, const TextEncoder& encoder,
                      const TagVocabulary& tags = TagVocabulary::default_v1(), std::string page_id = {});

/// Positional encoding of a built graph's parent/child skeleton.
LaplacianPe laplacian_pe(const PageGraph& graph, std::size_t dim = kPeDim);

/// parse_html followed by build_graph.
PageGraph featurize_html(std::string_view source, const TextEncoder& encoder,
                         const TagVocabulary& tags = TagVocabulary::default_v1(), std::string page_id = {});

}  // namespace grownup::graph
