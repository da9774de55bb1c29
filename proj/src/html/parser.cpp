#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "grownup/errors.hpp"
#include "grownup/html/dom.hpp"
#include "grownup/html/encoding.hpp"

namespace grownup::html {

DomNode* DomNode::append_child(std::unique_ptr<DomNode> child) {
  child->parent = this;
  child->child_index = children.size();
  children.push_back(std::move(child));
  return children.back().get();
}

const std::string* DomNode::attribute(std::string_view name) const {
  auto it = attributes.find(std::string(name));
  return it == attributes.end() ? nullptr : &it->second;
}

std::size_t count_nodes(const DomNode& root) {
  std::size_t n = 0;
  walk_preorder(root, [&](const DomNode&, std::size_t) { ++n; });
  return n;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

namespace {

using TagSet = std::unordered_set<std::string_view>;

const TagSet kVoid = {"area", "base",  "br",    "col",   "embed", "hr",    "img",   "input", "keygen",
                      "link", "meta",  "param", "source", "track", "wbr",  "basefont", "bgsound", "frame"};

// Content is not markup; the element ends at the matching end tag.
const TagSet kRawText = {"script", "style", "xmp", "iframe", "noembed", "noframes", "plaintext"};
// Like raw text but entities are decoded and the content is visible text.
const TagSet kRcData = {"textarea", "title"};

const TagSet kClosesParagraph = {
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir", "div", "dl",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hgroup", "hr", "li", "dd", "dt", "main", "menu", "nav", "ol", "p", "pre", "section",
    "summary", "table", "ul", "listing", "plaintext", "xmp"};

const TagSet kHeadings = {"h1", "h2", "h3", "h4", "h5", "h6"};

const TagSet kSpecial = {
    "address", "applet", "area", "article", "aside", "base", "basefont", "bgsound", "blockquote",
    "body", "br", "button", "caption", "center", "col", "colgroup", "dd", "details", "dir", "div",
    "dl", "dt", "embed", "fieldset", "figcaption", "figure", "footer", "form", "frame", "frameset",
    "h1", "h2", "h3", "h4", "h5", "h6", "head", "header", "hgroup", "hr", "html", "iframe", "img",
    "input", "keygen", "li", "link", "listing", "main", "marquee", "menu", "meta", "nav", "noembed",
    "noframes", "noscript", "object", "ol", "p", "param", "plaintext", "pre", "script", "section",
    "select", "source", "style", "summary", "table", "tbody", "td", "template", "textarea", "tfoot",
    "th", "thead", "title", "tr", "track", "ul", "wbr", "xmp"};

const TagSet kScopeBoundary = {"html", "table", "td", "th", "caption", "marquee", "object", "applet",
                               "template"};

// Beyond this depth new elements become siblings instead of children.
constexpr std::size_t kMaxDepth = 512;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Tag {
  std::string name;
  std::map<std::string, std::string> attributes;
  bool self_closing = false;
  bool end = false;
  std::size_t begin = 0;
  std::size_t end_pos = 0;
};

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view src) : src_(src) {
    doc_ = std::make_unique<DomNode>();
    doc_->tag_name = "#document";
    stack_.push_back(doc_.get());
  }

  std::unique_ptr<DomNode> run() {
    std::size_t i = 0;
    while (i < src_.size()) {
      if (src_[i] != '<') {
        const std::size_t next = src_.find('<', i);
        const std::size_t stop = next == std::string_view::npos ? src_.size() : next;
        text(decode_entities(src_.substr(i, stop - i)));
        i = stop;
        continue;
      }
      i = markup(i);
    }
    while (stack_.size() > 1) pop(src_.size());
    return finish();
  }

 private:
  DomNode* current() { return stack_.back(); }

  void text(std::string_view t) {
    if (t.empty()) return;
    DomNode* n = current();
    auto& mark = text_mark_[n];
    if (!n->direct_text.empty() && n->children.size() != mark) n->direct_text.push_back(' ');
    n->direct_text.append(t);
    mark = n->children.size();
  }

  void pop(std::size_t end) {
    stack_.back()->span.end = end;
    stack_.pop_back();
  }

  // Pops up to and including stack_[k].
  void pop_through(std::size_t k, std::size_t end) {
    while (stack_.size() > k) pop(end);
  }

  // Index in the stack of the nearest open `name`, searching no further than
  // a scope boundary; 0 when absent.
  std::size_t in_scope(std::string_view name, const TagSet& boundary = kScopeBoundary) const {
    for (std::size_t k = stack_.size(); k-- > 1;) {
      if (stack_[k]->tag_name == name) return k;
      if (boundary.count(stack_[k]->tag_name)) return 0;
    }
    return 0;
  }

  std::size_t markup(std::size_t i) {
    std::string_view rest = src_.substr(i);
    if (rest.substr(0, 4) == "<!--") {
      std::size_t close = src_.find("-->", i + 4);
      // "<!-->" and "<!--->" are complete (empty) comments.
      if (rest.substr(0, 5) == "<!-->") close = i + 2;
      else if (rest.substr(0, 6) == "<!--->") close = i + 3;
      const std::size_t content_end = close == std::string_view::npos ? src_.size() : close;
      const std::size_t stop = close == std::string_view::npos ? src_.size() : close + 3;
      auto node = std::make_unique<DomNode>();
      node->tag_name = "#comment";
      if (content_end > i + 4) node->raw_text.assign(src_.substr(i + 4, content_end - i - 4));
      node->span = {i, stop};
      current()->append_child(std::move(node));
      return stop;
    }
    if (rest.size() >= 2 && (rest[1] == '!' || rest[1] == '?')) {
      // Doctype, processing instructions and bogus comments are dropped.
      const std::size_t close = src_.find('>', i);
      return close == std::string_view::npos ? src_.size() : close + 1;
    }
    if (rest.size() >= 3 && rest[1] == '/' && std::isalpha(static_cast<unsigned char>(rest[2]))) {
      Tag tag = read_tag(i + 2, true);
      tag.begin = i;
      end_tag(tag);
      return tag.end_pos;
    }
    if (rest.size() >= 2 && rest[1] == '/') {
      const std::size_t close = src_.find('>', i);
      return close == std::string_view::npos ? src_.size() : close + 1;
    }
    if (rest.size() >= 2 && std::isalpha(static_cast<unsigned char>(rest[1]))) {
      Tag tag = read_tag(i + 1, false);
      tag.begin = i;
      return start_tag(tag);
    }
    text("<");
    return i + 1;
  }

  Tag read_tag(std::size_t i, bool end) {
    Tag tag;
    tag.end = end;
    std::size_t j = i;
    while (j < src_.size() && !is_space(src_[j]) && src_[j] != '/' && src_[j] != '>') ++j;
    tag.name = lower(src_.substr(i, j - i));
    while (j < src_.size()) {
      while (j < src_.size() && (is_space(src_[j]) || src_[j] == '/')) {
        if (src_[j] == '/' && j + 1 < src_.size() && src_[j + 1] == '>') tag.self_closing = true;
        ++j;
      }
      if (j >= src_.size()) break;
      if (src_[j] == '>') {
        ++j;
        break;
      }
      std::size_t k = j + 1;  // a leading '=' belongs to the name
      while (k < src_.size() && !is_space(src_[k]) && src_[k] != '/' && src_[k] != '>' && src_[k] != '=') ++k;
      std::string name = lower(src_.substr(j, k - j));
      j = k;
      while (j < src_.size() && is_space(src_[j])) ++j;
      std::string value;
      if (j < src_.size() && src_[j] == '=') {
        ++j;
        while (j < src_.size() && is_space(src_[j])) ++j;
        if (j < src_.size() && (src_[j] == '"' || src_[j] == '\'')) {
          const char q = src_[j];
          const std::size_t close = src_.find(q, j + 1);
          const std::size_t stop = close == std::string_view::npos ? src_.size() : close;
          value = decode_entities(src_.substr(j + 1, stop - j - 1), true);
          j = close == std::string_view::npos ? src_.size() : close + 1;
        } else {
          k = j;
          while (k < src_.size() && !is_space(src_[k]) && src_[k] != '>') ++k;
          value = decode_entities(src_.substr(j, k - j), true);
          j = k;
        }
      }
      if (!end) tag.attributes.emplace(std::move(name), std::move(value));  // first wins
    }
    tag.end_pos = j;
    return tag;
  }

  DomNode* find_open(std::string_view name) const {
    for (auto* n : stack_)
      if (n->tag_name == name) return n;
    return nullptr;
  }

  void merge_attributes(DomNode* node, const Tag& tag) {
    for (const auto& [k, v] : tag.attributes) node->attributes.emplace(k, v);
  }

  // Closes elements the new start tag implicitly ends.
  void implied_closes(const std::string& name, std::size_t at) {
    if (kClosesParagraph.count(name)) {
      if (std::size_t k = in_scope("p")) pop_through(k, at);
    }
    if (name == "li") {
      static const TagSet boundary = {"ul", "ol", "menu", "table", "td", "th", "html", "body"};
      if (std::size_t k = in_scope("li", boundary)) pop_through(k, at);
    } else if (name == "dt" || name == "dd") {
      static const TagSet boundary = {"dl", "table", "td", "th", "html", "body"};
      for (std::size_t k = stack_.size(); k-- > 1;) {
        const auto& t = stack_[k]->tag_name;
        if (t == "dt" || t == "dd") {
          pop_through(k, at);
          break;
        }
        if (boundary.count(t)) break;
      }
    } else if (name == "option" || name == "optgroup") {
      if (current()->tag_name == "option") pop(at);
      if (name == "optgroup" && current()->tag_name == "optgroup") pop(at);
    } else if (name == "tr" || name == "td" || name == "th" || name == "thead" || name == "tbody" ||
               name == "tfoot" || name == "caption") {
      static const TagSet boundary = {"table", "html"};
      // Innermost table-structure element that the new one cannot nest in.
      std::vector<std::string_view> closers;
      if (name == "td" || name == "th") closers = {"td", "th"};
      else if (name == "tr") closers = {"tr", "td", "th"};
      else closers = {"thead", "tbody", "tfoot", "tr", "td", "th", "caption"};
      for (std::size_t k = stack_.size(); k-- > 1;) {
        const auto& t = stack_[k]->tag_name;
        if (std::find(closers.begin(), closers.end(), t) != closers.end()) {
          // Keep going outward so e.g. <tr> closes an open <td> and its <tr>.
          std::size_t outer = k;
          for (std::size_t m = k; m-- > 1;) {
            const auto& u = stack_[m]->tag_name;
            if (boundary.count(u)) break;
            if (std::find(closers.begin(), closers.end(), u) != closers.end()) outer = m;
          }
          pop_through(outer, at);
          break;
        }
        if (boundary.count(t)) break;
      }
    } else if (name == "a") {
      if (std::size_t k = in_scope("a")) pop_through(k, at);
    } else if (kHeadings.count(name) && kHeadings.count(current()->tag_name)) {
      pop(at);
    } else if (name == "button") {
      if (std::size_t k = in_scope("button")) pop_through(k, at);
    }
  }

  std::size_t start_tag(Tag& tag) {
    const std::size_t at = tag.begin;
    if (tag.name == "html") {
      if (DomNode* h = find_open("html")) {
        merge_attributes(h, tag);
      } else if (stack_.size() == 1 && !has_element(*doc_)) {
        push(make_node(tag));
      }
      return tag.end_pos;
    }
    if (tag.name == "body" || tag.name == "head") {
      if (DomNode* existing = find_existing(tag.name)) {
        merge_attributes(existing, tag);
        return tag.end_pos;
      }
      if (tag.name == "body") {
        if (std::size_t k = in_scope("head")) pop_through(k, at);
      }
    }
    implied_closes(tag.name, at);
    auto node = make_node(tag);
    const bool void_el = kVoid.count(tag.name) > 0;
    const bool foreign_close = tag.self_closing && (find_open("svg") || find_open("math") ||
                                                    tag.name == "svg" || tag.name == "math");
    if (void_el || foreign_close) {
      node->span.end = tag.end_pos;
      append(std::move(node));
      return tag.end_pos;
    }
    if (kRawText.count(tag.name) || kRcData.count(tag.name)) {
      const std::size_t close = find_raw_end(tag.name, tag.end_pos);
      std::string_view content = src_.substr(tag.end_pos, close - tag.end_pos);
      DomNode* n = append(std::move(node));
      if (kRcData.count(tag.name)) {
        n->direct_text = decode_entities(content);
      } else {
        n->raw_text.assign(content);
      }
      std::size_t stop = close;
      if (close < src_.size()) {
        const std::size_t gt = src_.find('>', close);
        stop = gt == std::string_view::npos ? src_.size() : gt + 1;
      }
      n->span.end = stop;
      return stop;
    }
    push(std::move(node));
    return tag.end_pos;
  }

  void end_tag(const Tag& tag) {
    const auto& name = tag.name;
    const std::size_t at = tag.end_pos;
    if (name == "html" || name == "body") return;  // later content stays inside
    if (name == "br") {
      Tag br;
      br.name = "br";
      br.begin = tag.begin;
      br.end_pos = tag.end_pos;
      start_tag(br);
      return;
    }
    if (kSpecial.count(name)) {
      const TagSet* boundary = &kScopeBoundary;
      static const TagSet table_boundary = {"html", "table"};
      static const TagSet html_boundary = {"html"};
      if (name == "table") boundary = &html_boundary;
      else if (name == "td" || name == "th" || name == "tr" || name == "tbody" || name == "thead" ||
               name == "tfoot" || name == "caption")
        boundary = &table_boundary;
      if (std::size_t k = in_scope(name, *boundary)) pop_through(k, at);
      return;
    }
    for (std::size_t k = stack_.size(); k-- > 1;) {
      if (stack_[k]->tag_name == name) {
        pop_through(k, at);
        return;
      }
      if (kSpecial.count(stack_[k]->tag_name)) return;
    }
  }

  std::size_t find_raw_end(std::string_view name, std::size_t from) const {
    if (name == "plaintext") return src_.size();
    std::size_t pos = from;
    while ((pos = src_.find("</", pos)) != std::string_view::npos) {
      const std::size_t after = pos + 2 + name.size();
      if (after <= src_.size() && lower(src_.substr(pos + 2, name.size())) == name &&
          (after == src_.size() || is_space(src_[after]) || src_[after] == '>' || src_[after] == '/')) {
        return pos;
      }
      pos += 2;
    }
    return src_.size();
  }

  std::unique_ptr<DomNode> make_node(const Tag& tag) {
    auto node = std::make_unique<DomNode>();
    node->tag_name = tag.name;
    node->attributes = tag.attributes;
    node->span = {tag.begin, tag.end_pos};
    return node;
  }

  DomNode* append(std::unique_ptr<DomNode> node) { return current()->append_child(std::move(node)); }

  void push(std::unique_ptr<DomNode> node) {
    if (stack_.size() > kMaxDepth) pop(node->span.begin);
    stack_.push_back(append(std::move(node)));
    if (stack_.back()->tag_name == "head" || stack_.back()->tag_name == "body") seen_.push_back(stack_.back());
  }

  DomNode* find_existing(std::string_view name) const {
    for (auto* n : seen_)
      if (n->tag_name == name) return n;
    return nullptr;
  }

  static bool has_element(const DomNode& n) {
    return std::any_of(n.children.begin(), n.children.end(), [](const auto& c) { return !c->is_comment(); });
  }

  std::unique_ptr<DomNode> finish() {
    walk_preorder(*doc_, [](const DomNode& cn, std::size_t) {
      auto& n = const_cast<DomNode&>(cn);
      n.direct_text = collapse_whitespace(n.direct_text);
    });
    std::size_t elements = 0;
    DomNode* html = nullptr;
    for (auto& c : doc_->children) {
      if (c->is_comment()) continue;
      ++elements;
      if (c->tag_name == "html") html = c.get();
    }
    if (elements == 0 && doc_->direct_text.empty()) {
      throw EmptyDocument("no element or text could be recovered from the document");
    }
    if (elements == 1 && html && doc_->direct_text.empty()) {
      for (auto& c : doc_->children) {
        if (c.get() == html) {
          auto root = std::move(c);
          root->parent = nullptr;
          root->child_index = 0;
          return root;
        }
      }
    }
    doc_->tag_name = "html";
    doc_->span = {0, src_.size()};
    return std::move(doc_);
  }

  std::string_view src_;
  std::unique_ptr<DomNode> doc_;
  std::vector<DomNode*> stack_;
  std::vector<DomNode*> seen_;
  std::unordered_map<DomNode*, std::size_t> text_mark_;
};

}  // namespace

std::unique_ptr<DomNode> parse_html_utf8(std::string_view utf8) { return TreeBuilder(utf8).run(); }

std::unique_ptr<DomNode> parse_html(std::string_view source) {
  const Decoded d = decode_document(source);
  return parse_html_utf8(d.utf8);
}

}  // namespace grownup::html
