#include "grownup/graph/schema.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grownup/errors.hpp"
#include "grownup/io/binary.hpp"

namespace grownup::graph {

namespace {

constexpr std::string_view kDefaultTags =
#include "tags_v1.inc"
    ;

}  // namespace

const Slice& slice(std::string_view name) {
  for (const auto& s : kSlices)
    if (s.name == name) return s;
  throw InvalidConfig("unknown feature slice " + std::string(name));
}

const TagVocabulary& TagVocabulary::default_v1() {
  static const TagVocabulary vocab = parse(kDefaultTags);
  return vocab;
}

TagVocabulary TagVocabulary::parse(std::string_view text) {
  TagVocabulary v;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty() || line.rfind("//", 0) == 0) continue;
    std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!v.index_.emplace(line, v.tags_.size()).second) {
      throw InvalidConfig("duplicate tag in vocabulary: " + line);
    }
    v.tags_.push_back(line);
  }
  if (v.tags_.size() != kNumTags) {
    throw InvalidConfig("tag vocabulary must list exactly " + std::to_string(kNumTags) + " tags, got " +
                        std::to_string(v.tags_.size()));
  }
  return v;
}

TagVocabulary TagVocabulary::load(const std::string& path) { return parse(io::read_file(path)); }

std::size_t TagVocabulary::index_of(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  return it == index_.end() ? kNumTags : it->second;
}

std::uint64_t TagVocabulary::fingerprint() const {
  std::uint64_t h = fnv1a64("tags");
  for (const auto& t : tags_) h = fnv1a64(t + "\n", h);
  return h;
}

std::uint64_t schema_hash(const TagVocabulary& tags) {
  std::uint64_t h = fnv1a64("grownup-schema-1");
  for (const auto& s : kSlices) {
    h = fnv1a64(std::string(s.name) + ":" + std::to_string(s.offset) + ":" + std::to_string(s.size) + ";", h);
  }
  return h ^ tags.fingerprint();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

float log_scaled(double x, double cap) {
  const double v = std::log1p(std::max(0.0, x)) / std::log1p(cap);
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace grownup::graph
