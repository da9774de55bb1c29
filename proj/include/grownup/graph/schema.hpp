#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grownup::graph {

struct Slice {
  std::string_view name;
  std::size_t offset;
  std::size_t size;
};

inline constexpr std::array<Slice, 10> kSlices = {{
    {"text", 0, 513},
    {"class", 513, 512},
    {"id", 1025, 512},
    {"tag_type", 1537, 84},
    {"font_weight", 1621, 3},
    {"font_style", 1624, 4},
    {"font_size", 1628, 10},
    {"num_child", 1638, 1},
    {"child_index", 1639, 32},
    {"pos_encoding", 1671, 32},
}};

inline constexpr std::size_t kFeatureWidth = 1703;
inline constexpr std::size_t kTextDim = 512;
inline constexpr std::size_t kNumTags = 83;  // plus one catch-all
inline constexpr std::size_t kChildIndexSlots = 32;
inline constexpr std::size_t kPeDim = 32;

namespace offset {
inline constexpr std::size_t text = 0;
inline constexpr std::size_t text_length = 512;
inline constexpr std::size_t klass = 513;
inline constexpr std::size_t id = 1025;
inline constexpr std::size_t tag_type = 1537;
inline constexpr std::size_t font_weight = 1621;
inline constexpr std::size_t font_style = 1624;
inline constexpr std::size_t font_size = 1628;
inline constexpr std::size_t num_child = 1638;
inline constexpr std::size_t child_index = 1639;
inline constexpr std::size_t pos_encoding = 1671;
}  // namespace offset

const Slice& slice(std::string_view name);

/// The 83 tag names of the tag_type one-hot; anything else maps to the
/// catch-all slot 83.
class TagVocabulary {
 public:
  /// The pinned default list shipped as data/tags_v1.txt.
  static const TagVocabulary& default_v1();
  /// One tag per line; blank lines and lines starting with "//" are skipped.
  /// Throws InvalidConfig unless exactly 83 distinct tags are listed.
  static TagVocabulary parse(std::string_view text);
  static TagVocabulary load(const std::string& path);

  std::size_t index_of(std::string_view tag) const;
  const std::vector<std::string>& tags() const { return tags_; }
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Hash of the slice layout and tag vocabulary; stored in graph records and
/// checkpoints so incompatible featurizations are rejected.
std::uint64_t schema_hash(const TagVocabulary& tags);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// log1p(x) / log1p(cap), clipped to [0, 1].
float log_scaled(double x, double cap);

}  // namespace grownup::graph
