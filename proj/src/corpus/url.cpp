#include <algorithm>
#include <array>
#include <cctype>

#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"

namespace grownup::corpus {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Second-level labels that commonly sit under a two-letter country code as
// part of the public suffix (example.co.uk, example.com.au).
constexpr std::array<std::string_view, 9> kSecondLevel = {"co", "com", "net", "org", "ac", "gov", "edu", "ne", "or"};

std::string registrable_domain(const std::string& host) {
  const bool numeric = std::all_of(host.begin(), host.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; });
  if (numeric || host.front() == '[') return host;
  std::vector<std::string_view> labels;
  std::string_view rest = host;
  for (std::size_t dot; (dot = rest.find('.')) != std::string_view::npos; rest.remove_prefix(dot + 1)) {
    labels.push_back(rest.substr(0, dot));
  }
  labels.push_back(rest);
  for (auto l : labels)
    if (l.empty()) throw MalformedUrl("empty host label in '" + host + "'");
  std::size_t keep = 2;
  if (labels.size() >= 3 && labels.back().size() == 2 &&
      std::find(kSecondLevel.begin(), kSecondLevel.end(), labels[labels.size() - 2]) != kSecondLevel.end()) {
    keep = 3;
  }
  if (labels.size() <= keep) return host;
  std::string out;
  for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
    if (!out.empty()) out += '.';
    out += labels[i];
  }
  return out;
}

}  // namespace

std::string site_key(std::string_view url) {
  const std::string original(url);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.front()))) url.remove_prefix(1);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.back()))) url.remove_suffix(1);
  const auto sep = url.find("://");
  if (sep == std::string_view::npos || sep == 0) throw MalformedUrl("no scheme in '" + original + "'");
  if (!std::isalpha(static_cast<unsigned char>(url[0]))) throw MalformedUrl("bad scheme in '" + original + "'");
  for (char c : url.substr(0, sep)) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') {
      throw MalformedUrl("bad scheme in '" + original + "'");
    }
  }
  std::string_view rest = url.substr(sep + 3);
  const auto auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  std::string_view path = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string_view host = authority;
  if (!host.empty() && host.front() == '[') {
    const auto close = host.find(']');
    if (close == std::string_view::npos) throw MalformedUrl("unterminated IPv6 host in '" + original + "'");
    host = host.substr(0, close + 1);
  } else if (const auto colon = host.find(':'); colon != std::string_view::npos) {
    for (char c : host.substr(colon + 1))
      if (!std::isdigit(static_cast<unsigned char>(c))) throw MalformedUrl("bad port in '" + original + "'");
    host = host.substr(0, colon);
  }
  if (host.empty()) throw MalformedUrl("no host in '" + original + "'");
  for (char c : host) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '[' && c != ']' && c != ':') {
      throw MalformedUrl("bad host character in '" + original + "'");
    }
  }
  std::string h = lower(host);
  if (h.back() == '.') h.pop_back();
  if (h.empty()) throw MalformedUrl("no host in '" + original + "'");
  std::string key = registrable_domain(h);

  // Only a directory segment counts: "/blog/x" keys on "blog", "/x.html" on
  // nothing.
  path = path.substr(0, path.find_first_of("?#"));
  while (!path.empty() && path.front() == '/') path.remove_prefix(1);
  if (const auto slash = path.find('/'); slash != std::string_view::npos && slash > 0) {
    key += "/" + lower(path.substr(0, slash));
  }
  return key;
}

std::vector<std::string> pair_by_url_subpath(const std::vector<std::string>& urls) {
  std::vector<std::string> out;
  out.reserve(urls.size());
  for (const auto& u : urls) out.push_back(site_key(u));
  return out;
}

}  // namespace grownup::corpus
