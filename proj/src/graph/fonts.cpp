#include "grownup/graph/fonts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace grownup::graph {

namespace {

std::string trim_lower(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  // "!important" does not change what the value is.
  if (auto bang = out.find('!'); bang != std::string::npos) {
    out.erase(bang);
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  }
  return out;
}

bool is_inherit(std::string_view v) { return v == "inherit" || v == "unset" || v == "revert"; }

std::optional<FontWeight> weight_value(std::string_view v) {
  if (is_inherit(v)) return std::nullopt;
  if (v == "bold" || v == "bolder") return FontWeight::Bold;
  if (v == "normal" || v == "lighter" || v == "initial") return FontWeight::Normal;
  int n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec == std::errc() && p == v.data() + v.size() && n >= 1 && n <= 1000) {
    return n >= 600 ? FontWeight::Bold : FontWeight::Normal;
  }
  return FontWeight::Unknown;
}

std::optional<FontStyle> style_value(std::string_view v) {
  if (is_inherit(v)) return std::nullopt;
  if (v == "normal" || v == "initial") return FontStyle::Normal;
  if (v == "italic") return FontStyle::Italic;
  if (v.rfind("oblique", 0) == 0) return FontStyle::Oblique;
  return FontStyle::Unknown;
}

std::optional<FontSize> size_keyword(std::string_view v) {
  if (v == "xx-small") return FontSize::XXSmall;
  if (v == "x-small") return FontSize::XSmall;
  if (v == "small") return FontSize::Small;
  if (v == "medium" || v == "initial") return FontSize::Medium;
  if (v == "large") return FontSize::Large;
  if (v == "x-large") return FontSize::XLarge;
  if (v == "xx-large" || v == "xxx-large") return FontSize::XXLarge;
  if (v == "smaller") return FontSize::Smaller;
  if (v == "larger") return FontSize::Larger;
  return std::nullopt;
}

// Absolute lengths snap to the nearest keyword size (16px = medium);
// relative lengths only say larger or smaller than the parent.
std::optional<FontSize> size_value(std::string_view v, bool* parsed = nullptr) {
  if (parsed) *parsed = true;
  if (is_inherit(v)) return std::nullopt;
  if (auto k = size_keyword(v)) return k;
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || x < 0) {
    if (parsed) *parsed = false;
    return FontSize::Unknown;
  }
  const std::string_view unit = v.substr(static_cast<std::size_t>(p - v.data()));
  double px;
  if (unit == "px") px = x;
  else if (unit == "pt") px = x * 4.0 / 3.0;
  else if (unit == "pc") px = x * 16.0;
  else if (unit == "in") px = x * 96.0;
  else if (unit == "cm") px = x * 96.0 / 2.54;
  else if (unit == "mm") px = x * 96.0 / 25.4;
  else if (unit == "em" || unit == "rem" || unit == "%" || unit == "ex" || unit == "ch") {
    double ratio = unit == "%" ? x / 100.0 : unit == "ex" || unit == "ch" ? x / 2.0 : x;
    if (std::abs(ratio - 1.0) < 1e-9) return std::nullopt;
    return ratio > 1.0 ? FontSize::Larger : FontSize::Smaller;
  } else {
    if (parsed) *parsed = false;
    return FontSize::Unknown;
  }
  static constexpr std::pair<double, FontSize> kSteps[] = {
      {9, FontSize::XXSmall}, {10, FontSize::XSmall}, {13, FontSize::Small},   {16, FontSize::Medium},
      {18, FontSize::Large},  {24, FontSize::XLarge}, {32, FontSize::XXLarge}};
  FontSize best = FontSize::Medium;
  double best_d = 1e300;
  for (auto [size_px, k] : kSteps) {
    if (std::abs(px - size_px) < best_d) {
      best_d = std::abs(px - size_px);
      best = k;
    }
  }
  return best;
}

// "font: italic bold 12px/1.5 serif"; omitted weight and style reset to normal.
void apply_font_shorthand(std::string_view v, FontDeclaration& d) {
  if (is_inherit(v)) return;
  FontWeight w = FontWeight::Normal;
  FontStyle s = FontStyle::Normal;
  std::optional<FontSize> size;
  std::size_t i = 0;
  while (i < v.size()) {
    while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i;
    std::size_t j = i;
    while (j < v.size() && !std::isspace(static_cast<unsigned char>(v[j]))) ++j;
    std::string_view tok = v.substr(i, j - i);
    i = j;
    if (tok.empty()) continue;
    if (tok == "bold" || tok == "bolder" || tok == "lighter" ||
        (std::isdigit(static_cast<unsigned char>(tok[0])) && tok.size() == 3 && tok.find_first_not_of("0123456789") == std::string_view::npos)) {
      if (auto pw = weight_value(tok)) w = *pw;
    } else if (tok == "italic" || tok.rfind("oblique", 0) == 0) {
      if (auto ps = style_value(tok)) s = *ps;
    } else if (!size) {
      const std::string_view sz = tok.substr(0, tok.find('/'));
      bool ok = false;
      auto candidate = size_value(sz, &ok);
      if (ok || size_keyword(sz)) size = candidate;
    }
  }
  d.weight = w;
  d.style = s;
  d.size = size.value_or(FontSize::Unknown);
}

std::optional<FontSize> legacy_font_size(std::string_view attr) {
  std::string v = trim_lower(attr);
  if (v.empty()) return std::nullopt;
  if (v[0] == '+') return FontSize::Larger;
  if (v[0] == '-') return FontSize::Smaller;
  int n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc()) return FontSize::Unknown;
  static constexpr FontSize kMap[] = {FontSize::XSmall, FontSize::XSmall, FontSize::Small, FontSize::Medium,
                                      FontSize::Large,  FontSize::XLarge, FontSize::XXLarge, FontSize::XXLarge};
  return kMap[std::clamp(n, 0, 7)];
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_inline_style(std::string_view style) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t i = 0;
  while (i <= style.size()) {
    std::size_t semi = style.find(';', i);
    if (semi == std::string_view::npos) semi = style.size();
    std::string_view decl = style.substr(i, semi - i);
    const std::size_t colon = decl.find(':');
    if (colon != std::string_view::npos) {
      std::string prop = trim_lower(decl.substr(0, colon));
      std::string val = trim_lower(decl.substr(colon + 1));
      if (!prop.empty()) out.emplace_back(std::move(prop), std::move(val));
    }
    i = semi + 1;
  }
  return out;
}

FontDeclaration declared_font(const html::DomNode& node) {
  FontDeclaration tag;
  const auto& t = node.tag_name;
  if (t == "b" || t == "strong" || t == "th" || (t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6')) {
    tag.weight = FontWeight::Bold;
  }
  if (t == "i" || t == "em" || t == "cite" || t == "var" || t == "dfn" || t == "address") {
    tag.style = FontStyle::Italic;
  }
  if (t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6') {
    static constexpr FontSize kHeading[] = {FontSize::XXLarge, FontSize::XLarge, FontSize::Large,
                                            FontSize::Medium,  FontSize::Small,  FontSize::XSmall};
    tag.size = kHeading[t[1] - '1'];
  } else if (t == "small" || t == "sub" || t == "sup") {
    tag.size = FontSize::Smaller;
  } else if (t == "big") {
    tag.size = FontSize::Larger;
  } else if (t == "font") {
    if (const auto* s = node.attribute("size")) tag.size = legacy_font_size(*s);
  }

  FontDeclaration css;
  if (const auto* style = node.attribute("style")) {
    for (const auto& [prop, val] : parse_inline_style(*style)) {
      if (prop == "font-weight") {
        if (auto w = weight_value(val)) css.weight = w;
      } else if (prop == "font-style") {
        if (auto s = style_value(val)) css.style = s;
      } else if (prop == "font-size") {
        if (auto s = size_value(val)) css.size = s;
      } else if (prop == "font") {
        apply_font_shorthand(val, css);
      }
    }
  }
  return {css.weight ? css.weight : tag.weight, css.style ? css.style : tag.style,
          css.size ? css.size : tag.size};
}

FontFeatures extract_font_features(const html::DomNode& node) {
  std::optional<FontWeight> w;
  std::optional<FontStyle> s;
  std::optional<FontSize> z;
  for (const html::DomNode* n = &node; n && !(w && s && z); n = n->parent) {
    const FontDeclaration d = declared_font(*n);
    if (!w) w = d.weight;
    if (!s) s = d.style;
    if (!z) z = d.size;
  }
  return {w.value_or(FontWeight::Unknown), s.value_or(FontStyle::Unknown), z.value_or(FontSize::Unknown)};
}

}  // namespace grownup::graph
