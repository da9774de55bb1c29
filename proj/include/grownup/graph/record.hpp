#pragma once

#include <string>
#include <string_view>

#include "grownup/graph/page_graph.hpp"

namespace grownup::graph {

inline constexpr std::uint32_t kGraphRecordVersion = 1;

/// Binary page record: magic, format version, N, feature width, schema hash,
/// page id, row-major little-endian float32 features, one edge list per edge
/// type as (src, dst) uint32 pairs, node metadata, CRC-32 trailer.
std::string encode_graph_record(const PageGraph& g);
/// Throws CorruptRecord / VersionMismatch.
PageGraph decode_graph_record(std::string_view bytes);

void write_graph_record(const std::string& path, const PageGraph& g);
PageGraph read_graph_record(const std::string& path);

/// Debug dump: a header line followed by one JSON object per node holding
/// its metadata, edges and the decoded one-hot/scalar slices.
std::string graph_to_jsonl(const PageGraph& g);

}  // namespace grownup::graph
