#include <string>

#include "doctest.h"
#include "grownup/errors.hpp"
#include "grownup/html/dom.hpp"
#include "grownup/html/encoding.hpp"

using namespace grownup;
using namespace grownup::html;

namespace {

// Compact rendering "tag('text')[children...]" of a subtree, skipping the
// structural wrappers html/head/body so the result is comparable with trees
// from parsers that synthesize them.
std::string render(const DomNode& n) {
  std::string out;
  const bool wrapper = n.tag_name == "html" || n.tag_name == "body" || n.tag_name == "head";
  if (!wrapper) {
    out += n.tag_name;
    if (!n.direct_text.empty()) out += "'" + n.direct_text + "'";
  }
  if (!n.children.empty()) {
    if (!wrapper) out += "[";
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i) out += " ";
      out += render(*n.children[i]);
    }
    if (!wrapper) out += "]";
  }
  return out;
}

const DomNode& child(const DomNode& n, std::size_t i) {
  REQUIRE(i < n.children.size());
  return *n.children[i];
}

}  // namespace

TEST_CASE("well-formed minimal document") {
  auto root = parse_html("<html><body><p>hi</p></body></html>");
  CHECK(root->tag_name == "html");
  CHECK(root->parent == nullptr);
  const auto& body = child(*root, 0);
  CHECK(body.tag_name == "body");
  const auto& p = child(body, 0);
  CHECK(p.tag_name == "p");
  CHECK(p.direct_text == "hi");
  CHECK(p.parent == &body);
}

TEST_CASE("empty input has no recoverable element") {
  CHECK_THROWS_AS(parse_html(""), EmptyDocument);
  CHECK_THROWS_AS(parse_html("   \n "), EmptyDocument);
  CHECK_THROWS_AS(parse_html("<!-- only a comment -->"), EmptyDocument);
}

// Expected structures were produced by an HTML5-conformant parser and frozen
// (minus its implicit tbody, which this parser does not synthesize).
TEST_CASE("implied end tags match the reference recovery") {
  CHECK(render(*parse_html("<p>a<p>b")) == "p'a' p'b'");
  CHECK(render(*parse_html("<ul><li>x<li>y</ul>")) == "ul[li'x' li'y']");
  CHECK(render(*parse_html("<dl><dt>t<dd>d<dt>u</dl>")) == "dl[dt't' dd'd' dt'u']");
  CHECK(render(*parse_html("<select><option>a<option>b</select>")) == "select[option'a' option'b']");
  CHECK(render(*parse_html("<table><tr><td>1<td>2<tr><td>3</table>")) ==
        "table[tr[td'1' td'2'] tr[td'3']]");
  CHECK(render(*parse_html("<div><span>a</div>b")) == "div[span'a']");
}

TEST_CASE("two unclosed paragraphs become siblings") {
  auto root = parse_html("<p>a<p>b");
  REQUIRE(root->children.size() == 2);
  CHECK(root->children[0]->direct_text == "a");
  CHECK(root->children[1]->direct_text == "b");
  CHECK(root->children[1]->child_index == 1);
}

TEST_CASE("stray end tags do not close through block elements") {
  auto root = parse_html("<div><span>a</b>b</span></div>");
  CHECK(render(*root) == "div[span'ab']");
  // A block start tag closes an open paragraph.
  CHECK(render(*parse_html("<p>x<div>y</div>")) == "p'x' div'y'");
}

TEST_CASE("script, style and comments are nodes without direct text") {
  auto root = parse_html("<body>t<script>if (a<b) x();</script><style>p{}</style><!-- c --></body>");
  const auto& body = child(*root, 0);
  CHECK(body.direct_text == "t");
  REQUIRE(body.children.size() == 3);
  CHECK(body.children[0]->tag_name == "script");
  CHECK(body.children[0]->direct_text.empty());
  CHECK(body.children[0]->raw_text == "if (a<b) x();");
  CHECK(body.children[1]->raw_text == "p{}");
  CHECK(body.children[2]->is_comment());
  CHECK(body.children[2]->raw_text == " c ");
  CHECK(body.children[2]->direct_text.empty());
}

TEST_CASE("void elements and attributes") {
  auto root = parse_html("<div id=main CLASS='a b' data-x=\"1 &amp; 2\"><br>x<img src=a.png>y</div>");
  const auto& div = child(*root, 0);
  CHECK(*div.attribute("id") == "main");
  CHECK(*div.attribute("class") == "a b");
  CHECK(*div.attribute("data-x") == "1 & 2");
  CHECK(div.attribute("missing") == nullptr);
  REQUIRE(div.children.size() == 2);
  CHECK(div.children[0]->children.empty());
  CHECK(div.direct_text == "x y");
}

TEST_CASE("text runs are whitespace-collapsed and joined around children") {
  auto root = parse_html("<p>  one\n\t two <b>bold</b> three  </p>");
  const auto& p = child(*root, 0);
  CHECK(p.direct_text == "one two three");
  CHECK(p.children[0]->direct_text == "bold");
}

TEST_CASE("character references") {
  CHECK(decode_entities("a &amp; b &lt;&gt; &quot;") == "a & b <> \"");
  CHECK(decode_entities("&#65;&#x42;&#X43;") == "ABC");
  CHECK(decode_entities("&copy &nbsp;") == "\xC2\xA9 \xC2\xA0");
  CHECK(decode_entities("&#128;") == "\xE2\x82\xAC");  // windows-1252 euro
  CHECK(decode_entities("&#0;") == "\xEF\xBF\xBD");
  CHECK(decode_entities("&unknown; & &#;") == "&unknown; & &#;");
  // Legacy unterminated references are kept literal in attribute context.
  CHECK(decode_entities("?a=1&copy=2", true) == "?a=1&copy=2");
  CHECK(decode_entities("&notit;") == "\xC2\xACit;");
}

TEST_CASE("source spans cover start through end tag") {
  const std::string src = "<div><p>hi</p></div>";
  auto root = parse_html(src);
  const auto& div = child(*root, 0);
  CHECK(div.span.begin == 0);
  CHECK(div.span.end == src.size());
  const auto& p = child(div, 0);
  CHECK(src.substr(p.span.begin, p.span.end - p.span.begin) == "<p>hi</p>");
}

TEST_CASE("synthetic root wraps multiple top-level elements") {
  auto root = parse_html("<div>a</div><div>b</div>");
  CHECK(root->tag_name == "html");
  CHECK(root->children.size() == 2);
  auto text_only = parse_html("just text");
  CHECK(text_only->tag_name == "html");
  CHECK(text_only->direct_text == "just text");
}

TEST_CASE("deep nesting is capped, not recursive") {
  std::string src;
  for (int i = 0; i < 5000; ++i) src += "<div>";
  src += "x";
  auto root = parse_html(src);
  CHECK(count_nodes(*root) == 5001);
}

TEST_CASE("doctype and duplicate html/body tags") {
  auto root = parse_html("<!DOCTYPE html><html lang=en><body class=x><p>a</p><body id=y></body></html>");
  CHECK(*root->attribute("lang") == "en");
  REQUIRE(root->children.size() == 1);
  CHECK(*root->children[0]->attribute("id") == "y");
  CHECK(root->children[0]->children.size() == 1);
}

TEST_CASE("encoding detection") {
  CHECK(decode_document("caf\xC3\xA9").encoding == "utf-8");
  auto latin = decode_document("caf\xE9");
  CHECK(latin.encoding == "windows-1252");
  CHECK(latin.utf8 == "caf\xC3\xA9");
  auto declared = decode_document("<meta charset=\"iso-8859-2\"><p>\xB1</p>");
  CHECK(declared.encoding == "iso-8859-2");
  CHECK(declared.utf8.find("\xC4\x85") != std::string::npos);
  auto http_equiv = decode_document(
      "<meta http-equiv=\"Content-Type\" content=\"text/html; charset=windows-1251\">\xE0");
  CHECK(http_equiv.utf8.find("\xD0\xB0") != std::string::npos);  // cyrillic a
  auto bom = decode_document("\xEF\xBB\xBFx");
  CHECK(bom.utf8 == "x");
  auto utf16 = decode_document(std::string("\xFF\xFE<\0p\0>\0", 8));
  CHECK(utf16.utf8 == "<p>");
  CHECK(sniff_meta_charset("<META CHARSET=UTF-8>") == "utf-8");
  CHECK(utf8_length("h\xC3\xA9llo") == 5);
  CHECK_FALSE(is_valid_utf8("\xC0\x80"));
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));
}
