#include "grownup/graph/text_encoder.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "grownup/errors.hpp"

namespace grownup::graph {

void normalize(TextVector& v) {
  double ss = 0;
  for (float x : v) ss += static_cast<double>(x) * x;
  if (ss <= 0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (auto& x : v) x = static_cast<float>(x * inv);
}

TextVector HashedNgramEncoder::encode(std::string_view text) const {
  TextVector out{};
  if (text.empty()) return out;
  std::string marked;
  marked.reserve(text.size() + 2);
  marked.push_back('<');
  marked.append(text);
  marked.push_back('>');
  // Byte offset of each code point start, plus the end.
  std::vector<std::size_t> starts;
  starts.reserve(marked.size() + 1);
  for (std::size_t i = 0; i < marked.size(); ++i)
    if ((static_cast<unsigned char>(marked[i]) & 0xC0) != 0x80) starts.push_back(i);
  starts.push_back(marked.size());
  const std::size_t n_cp = starts.size() - 1;
  std::vector<double> counts(kTextDim, 0.0);
  for (std::size_t n = 3; n <= 5; ++n) {
    if (n_cp < n) break;
    for (std::size_t i = 0; i + n <= n_cp; ++i) {
      const std::string_view gram(marked.data() + starts[i], starts[i + n] - starts[i]);
      counts[fnv1a64(gram) % kTextDim] += 1.0;
    }
  }
  for (std::size_t k = 0; k < kTextDim; ++k) out[k] = static_cast<float>(counts[k]);
  normalize(out);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::unique_ptr<SidecarEncoder> SidecarEncoder::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding sidecar " + path);
  auto enc = std::make_unique<SidecarEncoder>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab != 64) throw CorruptRecord(path + ":" + std::to_string(lineno) + ": expected 64-char digest and a tab");
    TextVector v{};
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < kTextDim; ++k) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      auto [next, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc()) {
        throw CorruptRecord(path + ":" + std::to_string(lineno) + ": expected 512 floats");
      }
      p = next;
    }
    normalize(v);
    std::string key = line.substr(0, tab);
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    enc->table_.insert_or_assign(std::move(key), v);
  }
  return enc;
}

TextVector SidecarEncoder::encode(std::string_view text) const {
  if (text.empty()) return TextVector{};
  auto it = table_.find(sha256_hex(text));
  if (it == table_.end()) {
    misses_.fetch_add(1);
    return TextVector{};
  }
  return it->second;
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& spec) {
  if (spec.empty() || spec == "hashed") return std::make_unique<HashedNgramEncoder>();
  if (spec.rfind("sidecar:", 0) == 0) return SidecarEncoder::load(spec.substr(8));
  throw InvalidConfig("unknown text encoder '" + spec + "' (expected hashed or sidecar:<path>)");
}

}  // namespace grownup::graph
