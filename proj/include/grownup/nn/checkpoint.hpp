#pragma once

#include <optional>
#include <string>

#include "grownup/nn/optim.hpp"
#include "grownup/nn/parameters.hpp"

namespace grownup::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned weight container. Parameters are stored by dotted path with
/// their shape and little-endian float32 payload; optimizer moments and the
/// RNG state ride along so a run can resume exactly.
struct Checkpoint {
  std::string metadata_json;  // model config, schema hash, provenance
  ParamMap params;
  std::optional<OptimizerState> optimizer;
  std::string rng_state;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws CorruptRecord on bad magic/truncation/checksum, VersionMismatch on
/// an unknown format version.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace grownup::nn
