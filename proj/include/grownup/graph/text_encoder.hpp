#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

#include "grownup/graph/schema.hpp"

namespace grownup::graph {

using TextVector = std::array<float, kTextDim>;

/// Maps a string to a 512-dim vector with unit L2 norm, or all zeros for
/// empty input. Implementations must be deterministic and thread-safe.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual TextVector encode(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Character 3- to 5-grams of "<text>" (code points, with '<' and '>' as
/// boundary markers), FNV-1a hashed into 512 count buckets, L2 normalized.
class HashedNgramEncoder final : public TextEncoder {
 public:
  TextVector encode(std::string_view text) const override;
  std::string name() const override { return "hashed"; }
};

/// Precomputed embeddings keyed by the SHA-256 of the UTF-8 text. The file
/// has one "<hex digest>\t<512 whitespace-separated floats>" entry per line.
/// Vectors are renormalized on load. Unknown texts encode to zeros and are
/// counted in misses().
class SidecarEncoder final : public TextEncoder {
 public:
  static std::unique_ptr<SidecarEncoder> load(const std::string& path);

  TextVector encode(std::string_view text) const override;
  std::string name() const override { return "sidecar"; }

  std::size_t size() const { return table_.size(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::unordered_map<std::string, TextVector> table_;
  mutable std::atomic<std::size_t> misses_{0};
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Scales v to unit norm in place; zero vectors stay zero.
void normalize(TextVector& v);

/// "hashed" or "sidecar:<path>".
std::unique_ptr<TextEncoder> make_encoder(const std::string& spec);

}  // namespace grownup::graph
