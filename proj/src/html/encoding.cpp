#include "grownup/html/encoding.hpp"

#include <unicode/ucnv.h>

#include <algorithm>
#include <cctype>
#include <memory>

namespace grownup::html {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Labels browsers treat as windows-1252 or UTF-8 regardless of the letter of
// the declaration.
std::string canonical_label(std::string label) {
  if (label == "iso-8859-1" || label == "latin1" || label == "iso8859-1" || label == "l1" ||
      label == "us-ascii" || label == "ascii" || label == "cp1252" || label == "x-cp1252") {
    return "windows-1252";
  }
  if (label == "utf8" || label == "unicode-1-1-utf-8") return "utf-8";
  // A document that could be sniffed as ASCII cannot really be UTF-16.
  if (label.rfind("utf-16", 0) == 0) return "utf-8";
  return label;
}

bool convert(std::string_view bytes, const char* from, std::string& out) {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UConverter, decltype(&ucnv_close)> conv(ucnv_open(from, &status), &ucnv_close);
  if (U_FAILURE(status)) return false;
  std::unique_ptr<UConverter, decltype(&ucnv_close)> utf8(ucnv_open("UTF-8", &status), &ucnv_close);
  if (U_FAILURE(status)) return false;
  out.assign(bytes.size() * 3 + 16, '\0');
  char* target = out.data();
  const char* source = bytes.data();
  ucnv_convertEx(utf8.get(), conv.get(), &target, out.data() + out.size(), &source,
                 bytes.data() + bytes.size(), nullptr, nullptr, nullptr, nullptr, true, true,
                 &status);
  if (U_FAILURE(status)) return false;
  out.resize(static_cast<std::size_t>(target - out.data()));
  return true;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    const unsigned char c = p[i];
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((p[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (p[i + k] & 0x3F);
    }
    // Overlong forms, surrogates, out of range.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string sniff_meta_charset(std::string_view head) {
  const std::string text = lower_ascii(head.substr(0, std::min<std::size_t>(head.size(), 1024)));
  std::size_t pos = 0;
  while ((pos = text.find("<meta", pos)) != std::string::npos) {
    const std::size_t close = text.find('>', pos);
    const std::string_view tag =
        std::string_view(text).substr(pos, close == std::string::npos ? std::string::npos : close - pos);
    pos += 5;
    const std::size_t cs = tag.find("charset");
    if (cs == std::string_view::npos) continue;
    std::size_t i = cs + 7;
    while (i < tag.size() && std::isspace(static_cast<unsigned char>(tag[i]))) ++i;
    if (i >= tag.size() || tag[i] != '=') continue;
    ++i;
    while (i < tag.size() && (std::isspace(static_cast<unsigned char>(tag[i])) || tag[i] == '"' || tag[i] == '\''))
      ++i;
    std::size_t j = i;
    while (j < tag.size() && !std::isspace(static_cast<unsigned char>(tag[j])) && tag[j] != '"' &&
           tag[j] != '\'' && tag[j] != ';' && tag[j] != '/')
      ++j;
    if (j > i) return std::string(tag.substr(i, j - i));
  }
  return {};
}

Decoded decode_document(std::string_view bytes) {
  Decoded d;
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") {
    d.encoding = "utf-8";
    bytes.remove_prefix(3);
  } else if (bytes.size() >= 2 && (bytes.substr(0, 2) == "\xFF\xFE" || bytes.substr(0, 2) == "\xFE\xFF")) {
    d.encoding = bytes[0] == '\xFF' ? "utf-16le" : "utf-16be";
    if (convert(bytes.substr(2), d.encoding.c_str(), d.utf8)) return d;
    d.encoding.clear();
  }
  if (d.encoding.empty()) {
    std::string declared = canonical_label(sniff_meta_charset(bytes));
    if (!declared.empty() && declared != "utf-8") {
      if (convert(bytes, declared.c_str(), d.utf8)) {
        d.encoding = declared;
        return d;
      }
    } else if (declared == "utf-8") {
      d.encoding = "utf-8";
    }
  }
  if (is_valid_utf8(bytes)) {
    d.utf8.assign(bytes);
    if (d.encoding.empty()) d.encoding = "utf-8";
    return d;
  }
  if (d.encoding == "utf-8") {
    // Declared UTF-8 but malformed: keep the declaration, repair with U+FFFD.
    if (convert(bytes, "UTF-8", d.utf8)) return d;
  }
  d.encoding = "windows-1252";
  convert(bytes, "windows-1252", d.utf8);
  return d;
}

}  // namespace grownup::html
