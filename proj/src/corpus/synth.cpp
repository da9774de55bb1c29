#include <array>
#include <string>

#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"
#include "grownup/nn/rng.hpp"

namespace grownup::corpus {

namespace {

using nn::Rng;

constexpr std::array<std::string_view, 24> kSyllables = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi",
                                                         "bel", "cor", "dan", "fir", "gul", "hes", "jon", "kur",
                                                         "lim", "mar", "nos", "pel", "ros", "sul", "tan", "wex"};

std::string make_word(Rng& rng) {
  std::string w;
  const std::size_t n = 2 + rng.index(2);
  for (std::size_t i = 0; i < n; ++i) w += kSyllables[rng.index(kSyllables.size())];
  return w;
}

std::vector<std::string> make_vocab(Rng& rng, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(make_word(rng));
  return v;
}

std::string sentence(Rng& rng, const std::vector<std::string>& vocab, std::size_t lo, std::size_t hi) {
  const std::size_t n = lo + rng.index(hi - lo + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[rng.index(vocab.size())];
  }
  return s;
}

std::string page_name(std::size_t i) {
  std::string n = std::to_string(i);
  return "page" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

std::string page_shell(const std::string& title, const std::string& body) {
  return "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + title + "</title></head>\n<body>" + body +
         "</body></html>\n";
}

// One website's look: layout family plus its own naming and words.
struct SiteStyle {
  std::size_t layout;
  std::string prefix;
  std::vector<std::string> vocab;
  std::vector<std::string> menu;
};

std::string render_site_page(const SiteStyle& st, Rng& rng) {
  const auto& v = st.vocab;
  const std::string p = st.prefix;
  const std::size_t items = 2 + rng.index(5);
  std::string b;
  auto menu = [&](const char* item_tag) {
    std::string m;
    for (const auto& entry : st.menu) m += std::string("<") + item_tag + "><a href=\"/" + entry + "\">" + entry + "</a></" + item_tag + ">";
    return m;
  };
  switch (st.layout) {
    case 0:
      b += "<div id=\"" + p + "header\"><h1>" + sentence(rng, v, 2, 4) + "</h1><ul class=\"" + p + "nav\">" + menu("li") + "</ul></div>";
      b += "<div class=\"" + p + "main\">";
      for (std::size_t i = 0; i < items; ++i)
        b += "<div class=\"" + p + "post\"><h2>" + sentence(rng, v, 2, 5) + "</h2><p>" + sentence(rng, v, 8, 20) + "</p></div>";
      b += "</div><div id=\"" + p + "footer\"><p>" + sentence(rng, v, 3, 6) + "</p></div>";
      break;
    case 1:
      b += "<table class=\"" + p + "layout\"><tr><td class=\"" + p + "side\"><ul>" + menu("li") + "</ul></td><td class=\"" + p + "body\">";
      for (std::size_t i = 0; i < items; ++i) b += "<h3>" + sentence(rng, v, 2, 4) + "</h3><p>" + sentence(rng, v, 6, 15) + "</p>";
      b += "</td></tr></table><center><font size=\"1\">" + sentence(rng, v, 3, 5) + "</font></center>";
      break;
    case 2:
      b += "<header class=\"" + p + "top\"><nav>" + menu("span") + "</nav></header><section class=\"" + p + "list\">";
      for (std::size_t i = 0; i < items; ++i)
        b += "<article><h2>" + sentence(rng, v, 2, 4) + "</h2><p><em>" + sentence(rng, v, 1, 3) + "</em> " + sentence(rng, v, 5, 12) + "</p></article>";
      b += "</section><footer><small>" + sentence(rng, v, 2, 4) + "</small></footer>";
      break;
    case 3:
      b += "<div class=\"" + p + "wrap\"><div class=\"" + p + "left\"><dl>";
      for (const auto& entry : st.menu) b += "<dt>" + entry + "</dt><dd>" + sentence(rng, v, 1, 3) + "</dd>";
      b += "</dl><form><input type=\"text\" name=\"q\"><button>" + v[0] + "</button></form></div><div class=\"" + p + "right\">";
      for (std::size_t i = 0; i < items; ++i) b += "<blockquote>" + sentence(rng, v, 4, 10) + "</blockquote>";
      b += "</div></div>";
      break;
    default:
      b += "<div id=\"" + p + "gallery\">";
      for (std::size_t i = 0; i < items; ++i)
        b += "<figure><img src=\"/" + v[rng.index(v.size())] + ".jpg\"><figcaption><b>" + sentence(rng, v, 1, 3) + "</b></figcaption></figure>";
      b += "</div><ol class=\"" + p + "links\">" + menu("li") + "</ol><pre>" + sentence(rng, v, 3, 8) + "</pre>";
      break;
  }
  return page_shell(sentence(rng, v, 2, 3), b);
}

}  // namespace

std::vector<SynthSitePage> synth_site_corpus(std::size_t pages, std::size_t sites, std::uint64_t seed) {
  if (sites == 0) throw InvalidConfig("synth: need at least one site");
  Rng rng(seed);
  std::vector<SiteStyle> styles;
  for (std::size_t s = 0; s < sites; ++s) {
    SiteStyle st;
    st.layout = s % 5;
    st.prefix = make_word(rng) + "-";
    st.vocab = make_vocab(rng, 30);
    st.menu = make_vocab(rng, 3 + rng.index(4));
    styles.push_back(std::move(st));
  }
  std::vector<SynthSitePage> out;
  for (std::size_t i = 0; i < pages; ++i) {
    const std::size_t s = i % sites;
    const std::string host = "site" + std::to_string(s) + ".example";
    const std::string section = styles[s].prefix.substr(0, styles[s].prefix.size() - 1);
    SynthSitePage p;
    p.url = "http://www." + host + "/" + section + "/page" + std::to_string(i) + ".html";
    p.site_key = site_key(p.url);
    p.page_id = "site" + std::to_string(s) + "/page" + std::to_string(i);
    p.html = render_site_page(styles[s], rng);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LabeledPage> synth_boilerplate_corpus(std::size_t pages, std::uint64_t seed) {
  Rng rng(seed);
  const auto content_words = make_vocab(rng, 60);
  const auto chrome_words = make_vocab(rng, 25);
  const std::array<std::string_view, 3> content_classes = {"content", "article-body", "post-text"};
  const std::array<std::string_view, 3> menu_classes = {"menu", "navbar", "links"};
  std::vector<LabeledPage> out;
  for (std::size_t i = 0; i < pages; ++i) {
    std::string b, gold;
    b += "<div class=\"" + std::string(menu_classes[rng.index(3)]) + "\"><ul>";
    for (std::size_t k = 0, n = 3 + rng.index(4); k < n; ++k)
      b += "<li><a href=\"/" + std::to_string(k) + "\">" + sentence(rng, chrome_words, 1, 2) + "</a></li>";
    b += "</ul></div>";
    if (rng.bernoulli(0.5)) b += "<div class=\"banner\"><p>" + sentence(rng, chrome_words, 3, 6) + "</p></div>";

    const std::string headline = sentence(rng, content_words, 3, 7);
    gold += headline + "\n";
    b += "<div class=\"" + std::string(content_classes[rng.index(3)]) + "\"><h1>" + headline + "</h1>";
    for (std::size_t k = 0, n = 2 + rng.index(5); k < n; ++k) {
      const std::string para = sentence(rng, content_words, 8, 25);
      gold += para + "\n";
      b += "<p>" + para + "</p>";
    }
    b += "</div>";
    b += "<div class=\"sidebar\"><h3>" + sentence(rng, chrome_words, 1, 3) + "</h3>";
    for (std::size_t k = 0, n = 1 + rng.index(3); k < n; ++k) b += "<p>" + sentence(rng, chrome_words, 4, 9) + "</p>";
    b += "</div><div id=\"footer\"><p>" + sentence(rng, chrome_words, 3, 6) + "</p></div>";
    const std::string id = page_name(i);
    out.push_back({id, page_shell(sentence(rng, chrome_words, 2, 3), b), gold});
  }
  return out;
}

GenreDataset synth_genre_corpus(std::size_t pages, std::size_t genres, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 8> kNames = {"shop", "news", "forum", "form",
                                                             "gallery", "docs", "directory", "personal"};
  if (genres == 0 || genres > kNames.size()) throw InvalidConfig("synth: genres must be in [1, 8]");
  Rng rng(seed);
  const auto words = make_vocab(rng, 80);
  GenreDataset d;
  for (std::size_t g = 0; g < genres; ++g) d.classes.emplace_back(kNames[g]);
  for (std::size_t i = 0; i < pages; ++i) {
    const std::size_t g = i % genres;
    const std::size_t k = 2 + rng.index(4);
    std::string b = "<div class=\"top\"><a href=\"/\">" + sentence(rng, words, 1, 2) + "</a> <a href=\"/about\">" +
                    sentence(rng, words, 1, 2) + "</a></div><div class=\"page\">";
    switch (g) {
      case 0:
        b += "<table>";
        for (std::size_t r = 0; r < k; ++r)
          b += "<tr><td><img src=\"p.jpg\"></td><td><span>" + sentence(rng, words, 1, 3) + "</span></td><td><a href=\"/buy\">" +
               sentence(rng, words, 1, 1) + "</a></td></tr>";
        b += "</table>";
        break;
      case 1:
        b += "<article><h1>" + sentence(rng, words, 3, 6) + "</h1><time>" + sentence(rng, words, 1, 1) + "</time>";
        for (std::size_t r = 0; r < k; ++r) b += "<p>" + sentence(rng, words, 8, 16) + "</p>";
        b += "</article>";
        break;
      case 2:
        b += "<ul>";
        for (std::size_t r = 0; r < k; ++r)
          b += "<li><b>" + sentence(rng, words, 1, 1) + "</b><blockquote>" + sentence(rng, words, 3, 8) + "</blockquote></li>";
        b += "</ul>";
        break;
      case 3:
        b += "<form><fieldset><legend>" + sentence(rng, words, 1, 2) + "</legend>";
        for (std::size_t r = 0; r < k; ++r) b += "<label>" + sentence(rng, words, 1, 2) + "</label><input type=\"text\">";
        b += "<button>" + sentence(rng, words, 1, 1) + "</button></fieldset></form>";
        break;
      case 4:
        for (std::size_t r = 0; r < k; ++r)
          b += "<figure><img src=\"g.jpg\"><figcaption>" + sentence(rng, words, 2, 4) + "</figcaption></figure>";
        break;
      case 5:
        b += "<h2>" + sentence(rng, words, 2, 3) + "</h2>";
        for (std::size_t r = 0; r < k; ++r) b += "<pre><code>" + sentence(rng, words, 3, 6) + "</code></pre>";
        break;
      case 6:
        b += "<ol>";
        for (std::size_t r = 0; r < k; ++r) b += "<li><a href=\"/x\">" + sentence(rng, words, 1, 3) + "</a></li>";
        b += "</ol>";
        break;
      default:
        b += "<address>" + sentence(rng, words, 2, 4) + "</address><img src=\"me.jpg\">";
        for (std::size_t r = 0; r < k; ++r) b += "<p><em>" + sentence(rng, words, 3, 8) + "</em></p>";
        break;
    }
    b += "</div><div class=\"bottom\"><p>" + sentence(rng, words, 2, 4) + "</p></div>";
    const std::string id = page_name(i);
    d.pages.push_back({d.classes[g] + "/" + id, page_shell(sentence(rng, words, 2, 3), b), g});
  }
  return d;
}

}  // namespace grownup::corpus
