#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

#include "grownup/html/dom.hpp"

namespace grownup::html {

namespace {

struct Entity {
  const char* name;
  const char* value;
};

constexpr Entity kEntities[] = {
#include "entities.inc"
};

const std::unordered_map<std::string_view, std::string_view>& entity_table() {
  static const auto* table = [] {
    auto* t = new std::unordered_map<std::string_view, std::string_view>();
    t->reserve(std::size(kEntities));
    for (const auto& e : kEntities) t->emplace(e.name, e.value);
    return t;
  }();
  return *table;
}

// C1 controls reinterpreted as windows-1252, as browsers do for &#128; etc.
constexpr std::uint32_t kC1[32] = {0x20AC, 0x81,   0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
                                   0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0x8D,   0x017D, 0x8F,
                                   0x90,   0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
                                   0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0x9D,   0x017E, 0x0178};

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Decodes a numeric reference starting after "&#". Returns consumed length
// (0 if not a reference).
std::size_t numeric_ref(std::string_view s, std::string& out) {
  std::size_t i = 0;
  bool hex = false;
  if (i < s.size() && (s[i] == 'x' || s[i] == 'X')) {
    hex = true;
    ++i;
  }
  const std::size_t digits_begin = i;
  std::uint64_t cp = 0;
  while (i < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[i])) : std::isdigit(static_cast<unsigned char>(s[i])))) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
    cp = cp * (hex ? 16 : 10) + static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    if (cp > 0x10FFFF) cp = 0x110000;
    ++i;
  }
  if (i == digits_begin) return 0;
  if (i < s.size() && s[i] == ';') ++i;
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    cp = 0xFFFD;
  } else if (cp >= 0x80 && cp <= 0x9F) {
    cp = kC1[cp - 0x80];
  }
  append_utf8(out, static_cast<std::uint32_t>(cp));
  return i;
}

}  // namespace

std::string decode_entities(std::string_view text, bool in_attribute) {
  if (text.find('&') == std::string_view::npos) return std::string(text);
  const auto& table = entity_table();
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    std::string_view rest = text.substr(i + 1);
    if (!rest.empty() && rest[0] == '#') {
      const std::size_t used = numeric_ref(rest.substr(1), out);
      if (used > 0) {
        i += 2 + used;
        continue;
      }
      out.push_back(text[i++]);
      continue;
    }
    // Longest named match; the longest entity name is 32 bytes.
    std::size_t best = 0;
    std::string_view value;
    const std::size_t limit = std::min<std::size_t>(rest.size(), 32);
    for (std::size_t len = limit; len >= 2; --len) {
      auto it = table.find(rest.substr(0, len));
      if (it != table.end()) {
        best = len;
        value = it->second;
        break;
      }
    }
    if (best > 0 && rest[best - 1] != ';' && in_attribute && best < rest.size() &&
        (rest[best] == '=' || is_alnum(rest[best]))) {
      best = 0;
    }
    if (best == 0) {
      out.push_back(text[i++]);
      continue;
    }
    out.append(value);
    i += 1 + best;
  }
  return out;
}

}  // namespace grownup::html
