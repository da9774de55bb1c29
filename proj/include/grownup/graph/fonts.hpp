#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "grownup/html/dom.hpp"

namespace grownup::graph {

// Enumerator order is the one-hot slot order.
enum class FontWeight { Normal, Bold, Unknown };
enum class FontStyle { Normal, Italic, Oblique, Unknown };
enum class FontSize { Smaller, Larger, XXSmall, XSmall, Small, Medium, Large, XLarge, XXLarge, Unknown };

struct FontFeatures {
  FontWeight weight = FontWeight::Unknown;
  FontStyle style = FontStyle::Unknown;
  FontSize size = FontSize::Unknown;
};

/// What a single node declares by itself, through its inline style (which
/// wins) or its presentational tag. Empty optionals mean "not set here".
struct FontDeclaration {
  std::optional<FontWeight> weight;
  std::optional<FontStyle> style;
  std::optional<FontSize> size;
};

FontDeclaration declared_font(const html::DomNode& node);

/// Each property comes from the node itself or the nearest ancestor that sets
/// it; Unknown when nothing on the chain does.
FontFeatures extract_font_features(const html::DomNode& node);

/// Splits "a: b; c: d" into lowercase (property, value) pairs, in order.
std::vector<std::pair<std::string, std::string>> parse_inline_style(std::string_view style);

}  // namespace grownup::graph
