#include "grownup/graph/page_graph.hpp"

#include <algorithm>

#include "grownup/html/encoding.hpp"

namespace grownup::graph {

namespace {

void put_vector(std::span<float> row, std::size_t offset, const TextVector& v) {
  std::copy(v.begin(), v.end(), row.begin() + static_cast<std::ptrdiff_t>(offset));
}

std::vector<UndirectedEdge> skeleton(const PageGraph& g) {
  std::vector<UndirectedEdge> out;
  out.reserve(g.edges_of(EdgeType::Parent).size());
  for (const auto& e : g.edges_of(EdgeType::Parent)) out.emplace_back(e.src, e.dst);
  return out;
}

}  // namespace

bool PageGraph::has_edge(EdgeType k, std::uint32_t src, std::uint32_t dst) const {
  const auto& es = edges_of(k);
  return std::binary_search(es.begin(), es.end(), Edge{src, dst});
}

std::vector<std::int64_t> PageGraph::parents() const {
  std::vector<std::int64_t> out(n_nodes, -1);
  for (const auto& e : edges_of(EdgeType::Parent)) out[e.src] = e.dst;
  return out;
}

LaplacianPe laplacian_pe(const PageGraph& graph, std::size_t dim) {
  const auto es = skeleton(graph);
  return laplacian_pe_from_edges(graph.n_nodes, es, dim);
}

PageGraph build_graph(const html::DomNode& root, const TextEncoder& encoder, const TagVocabulary& tags,
                      std::string page_id) {
  std::vector<const html::DomNode*> nodes;
  std::vector<std::int64_t> parent;
  {
    // Pre-order numbering with an explicit stack of (node, parent id).
    std::vector<std::pair<const html::DomNode*, std::int64_t>> stack{{&root, -1}};
    while (!stack.empty()) {
      auto [n, p] = stack.back();
      stack.pop_back();
      const auto id = static_cast<std::int64_t>(nodes.size());
      nodes.push_back(n);
      parent.push_back(p);
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.emplace_back(it->get(), id);
    }
  }

  PageGraph g;
  g.page_id = std::move(page_id);
  g.schema = schema_hash(tags);
  g.n_nodes = nodes.size();
  g.features.assign(g.n_nodes * kFeatureWidth, 0.0f);
  g.meta.resize(g.n_nodes);
  auto& parent_edges = g.edges[static_cast<std::size_t>(EdgeType::Parent)];
  auto& child_edges = g.edges[static_cast<std::size_t>(EdgeType::Child)];
  auto& self_edges = g.edges[static_cast<std::size_t>(EdgeType::Self)];

  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    const html::DomNode& n = *nodes[i];
    std::span<float> row(g.features.data() + i * kFeatureWidth, kFeatureWidth);

    put_vector(row, offset::text, encoder.encode(n.direct_text));
    row[offset::text_length] = log_scaled(static_cast<double>(html::utf8_length(n.direct_text)), 10000.0);
    const std::string* klass = n.attribute("class");
    const std::string* id = n.attribute("id");
    put_vector(row, offset::klass, encoder.encode(klass ? *klass : std::string_view{}));
    put_vector(row, offset::id, encoder.encode(id ? *id : std::string_view{}));
    row[offset::tag_type + tags.index_of(n.tag_name)] = 1.0f;

    const FontFeatures font = extract_font_features(n);
    row[offset::font_weight + static_cast<std::size_t>(font.weight)] = 1.0f;
    row[offset::font_style + static_cast<std::size_t>(font.style)] = 1.0f;
    row[offset::font_size + static_cast<std::size_t>(font.size)] = 1.0f;

    row[offset::num_child] = log_scaled(static_cast<double>(n.children.size()), 100.0);
    row[offset::child_index + std::min<std::size_t>(n.child_index, kChildIndexSlots - 1)] = 1.0f;

    auto& m = g.meta[i];
    m.tag = n.tag_name;
    m.text = n.direct_text;
    m.has_text = !n.direct_text.empty();
    m.span = n.span;
    m.num_children = static_cast<std::uint32_t>(n.children.size());

    const auto u = static_cast<std::uint32_t>(i);
    self_edges.push_back({u, u});
    if (parent[i] >= 0) {
      const auto p = static_cast<std::uint32_t>(parent[i]);
      parent_edges.push_back({u, p});
      child_edges.push_back({p, u});
    }
  }
  for (auto& es : g.edges) std::sort(es.begin(), es.end());

  const LaplacianPe pe = laplacian_pe(g, kPeDim);
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    for (std::size_t c = 0; c < kPeDim; ++c) {
      g.features[i * kFeatureWidth + offset::pos_encoding + c] = static_cast<float>(pe.at(i, c));
    }
  }
  return g;
}

PageGraph featurize_html(std::string_view source, const TextEncoder& encoder, const TagVocabulary& tags,
                         std::string page_id) {
  const auto root = html::parse_html(source);
  return build_graph(*root, encoder, tags, std::move(page_id));
}

}  // namespace grownup::graph
