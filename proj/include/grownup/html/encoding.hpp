#pragma once

#include <string>
#include <string_view>

namespace grownup::html {

struct Decoded {
  std::string utf8;
  std::string encoding;  // canonical name of the source encoding
};

/// Detects the encoding of an HTML byte string and converts it to UTF-8.
/// Order: byte-order mark, then a <meta> charset declaration in the first
/// 1024 bytes, then UTF-8 if the bytes validate, else windows-1252.
Decoded decode_document(std::string_view bytes);

/// Charset named by a <meta charset> or http-equiv declaration, lowercase,
/// or empty when there is none.
std::string sniff_meta_charset(std::string_view head);

bool is_valid_utf8(std::string_view bytes);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t utf8_length(std::string_view utf8);

}  // namespace grownup::html
