#pragma once

// Little-endian record encoding shared by checkpoints and graph records.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace grownup::io {

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  /// u32 length prefix followed by the raw bytes.
  void str(std::string_view s);
  void raw(std::string_view bytes) { buf_.append(bytes); }
  void f32s(std::span<const float> values);

  /// Appends the CRC-32 of everything written so far.
  void seal();

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked reader; any overrun throws CorruptRecord.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();
  std::string_view raw(std::size_t n);
  void f32s(std::span<float> out);

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  /// Verifies the trailing CRC-32 and drops it from the readable range.
  void verify_seal();

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace grownup::io
