#include "grownup/graph/record.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <json.hpp>

#include "grownup/errors.hpp"
#include "grownup/io/binary.hpp"

namespace grownup::graph {

namespace {

constexpr std::string_view kMagic = "GRUPGRPH";

// Index of the single 1 in a one-hot slice, or -1 when the slice is all zero.
int hot_index(std::span<const float> row, std::size_t offset, std::size_t size) {
  for (std::size_t k = 0; k < size; ++k)
    if (row[offset + k] != 0.0f) return static_cast<int>(k);
  return -1;
}

}  // namespace

std::string encode_graph_record(const PageGraph& g) {
  io::BinaryWriter w;
  w.raw(kMagic);
  w.u32(kGraphRecordVersion);
  w.u64(g.n_nodes);
  w.u32(static_cast<std::uint32_t>(kFeatureWidth));
  w.u64(g.schema);
  w.str(g.page_id);
  w.f32s(g.features);
  for (const auto& es : g.edges) {
    w.u64(es.size());
    for (const auto& e : es) {
      w.u32(e.src);
      w.u32(e.dst);
    }
  }
  for (const auto& m : g.meta) {
    w.str(m.tag);
    w.u8(m.has_text ? 1 : 0);
    w.str(m.text);
    w.u64(m.span.begin);
    w.u64(m.span.end);
    w.u32(m.num_children);
  }
  w.seal();
  return w.bytes();
}

PageGraph decode_graph_record(std::string_view bytes) {
  io::BinaryReader r(bytes);
  if (r.remaining() < kMagic.size() + 4 || r.raw(kMagic.size()) != kMagic) {
    throw CorruptRecord("not a graph record (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kGraphRecordVersion) {
    throw VersionMismatch("graph record version " + std::to_string(version) + ", expected " +
                          std::to_string(kGraphRecordVersion));
  }
  r.verify_seal();
  PageGraph g;
  g.n_nodes = r.u64();
  const std::uint32_t width = r.u32();
  if (width != kFeatureWidth) {
    throw VersionMismatch("graph record feature width " + std::to_string(width) + ", expected " +
                          std::to_string(kFeatureWidth));
  }
  if (g.n_nodes == 0 || g.n_nodes > r.remaining() / (kFeatureWidth * sizeof(float))) {
    throw CorruptRecord("implausible node count in graph record");
  }
  g.schema = r.u64();
  g.page_id = r.str();
  g.features.resize(g.n_nodes * kFeatureWidth);
  r.f32s(g.features);
  for (auto& es : g.edges) {
    const std::uint64_t count = r.u64();
    if (count > r.remaining() / 8) throw CorruptRecord("edge list overruns record");
    es.resize(count);
    for (auto& e : es) {
      e.src = r.u32();
      e.dst = r.u32();
      if (e.src >= g.n_nodes || e.dst >= g.n_nodes) throw CorruptRecord("edge endpoint out of range");
    }
  }
  g.meta.resize(g.n_nodes);
  for (auto& m : g.meta) {
    m.tag = r.str();
    m.has_text = r.u8() != 0;
    m.text = r.str();
    m.span.begin = r.u64();
    m.span.end = r.u64();
    m.num_children = r.u32();
  }
  if (r.remaining() != 0) throw CorruptRecord("trailing bytes in graph record");
  return g;
}

void write_graph_record(const std::string& path, const PageGraph& g) {
  io::write_file(path, encode_graph_record(g));
}

PageGraph read_graph_record(const std::string& path) { return decode_graph_record(io::read_file(path)); }

std::string graph_to_jsonl(const PageGraph& g) {
  using nlohmann::json;
  std::string out;
  json header = {{"page_id", g.page_id},
                 {"n_nodes", g.n_nodes},
                 {"feature_width", kFeatureWidth},
                 {"schema", g.schema},
                 {"edges", {{"parent", g.edges[0].size()}, {"child", g.edges[1].size()}, {"self", g.edges[2].size()}}}};
  out += header.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  const auto parents = g.parents();
  std::vector<std::vector<std::uint32_t>> children(g.n_nodes);
  for (const auto& e : g.edges_of(EdgeType::Child)) children[e.src].push_back(e.dst);
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    const auto row = g.row(i);
    const auto& m = g.meta[i];
    std::vector<double> pe(row.begin() + offset::pos_encoding, row.begin() + offset::pos_encoding + kPeDim);
    json node = {{"id", i},
                 {"tag", m.tag},
                 {"text", m.text},
                 {"has_text", m.has_text},
                 {"span", {m.span.begin, m.span.end}},
                 {"parent", parents[i]},
                 {"children", children[i]},
                 {"tag_type", hot_index(row, offset::tag_type, 84)},
                 {"font_weight", hot_index(row, offset::font_weight, 3)},
                 {"font_style", hot_index(row, offset::font_style, 4)},
                 {"font_size", hot_index(row, offset::font_size, 10)},
                 {"child_index", hot_index(row, offset::child_index, kChildIndexSlots)},
                 {"num_child", row[offset::num_child]},
                 {"text_length", row[offset::text_length]},
                 {"pos_encoding", pe}};
    out += node.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

}  // namespace grownup::graph
