#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace grownup::html {

/// Byte range in the decoded (UTF-8) document.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct DomNode {
  std::string tag_name;  // lowercase; "#comment" for comments
  std::map<std::string, std::string> attributes;
  /// Whitespace-collapsed text directly inside this node. Separate text runs
  /// are joined with one space. Always empty for script, style and comments.
  std::string direct_text;
  /// Verbatim content of script/style/comment nodes.
  std::string raw_text;
  std::vector<std::unique_ptr<DomNode>> children;
  std::size_t child_index = 0;
  DomNode* parent = nullptr;
  SourceSpan span;

  DomNode* append_child(std::unique_ptr<DomNode> child);
  const std::string* attribute(std::string_view name) const;
  bool is_comment() const { return tag_name == "#comment"; }
};

/// Number of nodes in the subtree rooted at `root`.
std::size_t count_nodes(const DomNode& root);

/// Pre-order traversal; the callback receives each node and its depth.
template <typename Fn>
void walk_preorder(const DomNode& root, Fn&& fn) {
  std::vector<std::pair<const DomNode*, std::size_t>> stack{{&root, 0}};
  while (!stack.empty()) {
    auto [node, depth] = stack.back();
    stack.pop_back();
    fn(*node, depth);
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it)
      stack.emplace_back(it->get(), depth + 1);
  }
}

/// Error-recovering parse of an HTML byte string in any common encoding.
/// Unclosed and misnested tags are repaired; the returned root is always an
/// `html` element (synthesized when the document lacks a single one).
/// Throws EmptyDocument when neither an element nor text can be recovered.
std::unique_ptr<DomNode> parse_html(std::string_view source);

/// Same as parse_html but for input already decoded to UTF-8.
std::unique_ptr<DomNode> parse_html_utf8(std::string_view utf8);

/// Decodes entity references in text or attribute values.
std::string decode_entities(std::string_view text, bool in_attribute = false);

/// Collapses runs of ASCII whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

}  // namespace grownup::html
