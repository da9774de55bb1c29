#include "grownup/nn/checkpoint.hpp"

#include "grownup/errors.hpp"
#include "grownup/io/binary.hpp"

namespace grownup::nn {

namespace {

constexpr std::string_view kMagic = "GRUPCKPT";

void write_params(io::BinaryWriter& w, const ParamMap& params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, arr] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(arr.shape.size()));
    for (auto d : arr.shape) w.u64(d);
    w.u64(arr.values.size());
    for (float v : arr.values) w.f32(v);
  }
}

ParamMap read_params(io::BinaryReader& r) {
  ParamMap out;
  const std::uint32_t n = r.u32();
  for (std::uint32_t k = 0; k < n; ++k) {
    std::string name = r.str();
    ParamArray arr;
    const std::uint32_t nd = r.u32();
    if (nd > 8) throw CorruptRecord("implausible tensor rank in checkpoint");
    for (std::uint32_t d = 0; d < nd; ++d) arr.shape.push_back(r.u64());
    const std::uint64_t count = r.u64();
    if (count != shape_numel(arr.shape) || count > r.remaining() / 4) {
      throw CorruptRecord("tensor payload size mismatch for " + name);
    }
    arr.values.resize(count);
    for (auto& v : arr.values) v = r.f32();
    out.emplace(std::move(name), std::move(arr));
  }
  return out;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  io::BinaryWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.str(ckpt.metadata_json);
  write_params(w, ckpt.params);
  w.u8(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    w.f64(o.options.lr);
    w.f64(o.options.beta1);
    w.f64(o.options.beta2);
    w.f64(o.options.eps);
    w.f64(o.options.weight_decay);
    w.u64(o.step);
    write_params(w, o.first_moment);
    write_params(w, o.second_moment);
  }
  w.str(ckpt.rng_state);
  w.seal();
  return w.bytes();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  io::BinaryReader r(bytes);
  if (r.remaining() < kMagic.size() + 8 || r.raw(kMagic.size()) != kMagic) {
    throw CorruptRecord("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint format version " + std::to_string(version) +
                          ", expected " + std::to_string(kCheckpointVersion));
  }
  r.verify_seal();
  Checkpoint c;
  c.metadata_json = r.str();
  c.params = read_params(r);
  if (r.u8()) {
    OptimizerState o;
    o.options.lr = r.f64();
    o.options.beta1 = r.f64();
    o.options.beta2 = r.f64();
    o.options.eps = r.f64();
    o.options.weight_decay = r.f64();
    o.step = r.u64();
    o.first_moment = read_params(r);
    o.second_moment = read_params(r);
    c.optimizer = std::move(o);
  }
  c.rng_state = r.str();
  if (r.remaining() != 0) throw CorruptRecord("trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace grownup::nn
