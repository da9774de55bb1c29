#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"

namespace grownup::corpus {

namespace {

bool is_html(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".html" || ext == ".htm";
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::pair<std::string_view, std::string_view> split_tab(std::string_view line) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) return {trim(line), {}};
  return {trim(line.substr(0, tab)), trim(line.substr(tab + 1))};
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::vector<std::string> SiteGroupedCorpus::sites() const {
  std::set<std::string> s;
  for (const auto& p : pages) s.insert(p.site_key);
  return {s.begin(), s.end()};
}

SiteGroupedCorpus load_site_directory(const fs::path& dir) {
  SiteGroupedCorpus c;
  for (const auto& site : sorted_entries(dir)) {
    if (!fs::is_directory(site)) continue;
    for (const auto& file : sorted_entries(site)) {
      if (!fs::is_regular_file(file) || !is_html(file)) continue;
      const std::string name = site.filename().string();
      c.pages.push_back({name + "/" + file.stem().string(), file, name});
    }
  }
  std::sort(c.pages.begin(), c.pages.end(), [](const auto& a, const auto& b) { return a.page_id < b.page_id; });
  return c;
}

SiteGroupedCorpus load_site_manifest(const fs::path& manifest) {
  std::istringstream in(read_file(manifest));
  const auto base = manifest.parent_path();
  SiteGroupedCorpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto [path, url] = split_tab(line);
    if (url.empty()) throw Error("manifest line without URL: " + line);
    const fs::path rel(std::string{path});
    auto id = rel;
    id.replace_extension();
    c.pages.push_back({id.generic_string(), base / rel, site_key(url)});
  }
  std::sort(c.pages.begin(), c.pages.end(), [](const auto& a, const auto& b) { return a.page_id < b.page_id; });
  return c;
}

SiteGroupedCorpus load_site_corpus(const fs::path& dir) {
  if (fs::exists(dir / "manifest.tsv")) return load_site_manifest(dir / "manifest.tsv");
  return load_site_directory(dir);
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw SplitMismatch("unknown split '" + std::string(s) + "'");
}

std::vector<std::pair<std::string, Split>> read_split_manifest(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, Split>> out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto [id, split] = split_tab(line);
    if (!seen.insert(std::string(id)).second) throw SplitMismatch("page '" + std::string(id) + "' listed twice");
    out.emplace_back(std::string(id), parse_split(split));
  }
  return out;
}

std::string clean_gold_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line, out;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (trim(line).substr(0, 4) == "URL:") continue;
    }
    // Paragraph markers: <p>, <h>, <l> and their numbered forms.
    std::string cleaned;
    for (std::size_t i = 0; i < line.size();) {
      if (line[i] == '<') {
        const auto close = line.find('>', i);
        if (close != std::string::npos && close - i <= 4) {
          const auto inner = std::string_view(line).substr(i + 1, close - i - 1);
          const auto name = inner.empty() || inner[0] != '/' ? inner : inner.substr(1);
          if (!name.empty() && (name[0] == 'p' || name[0] == 'h' || name[0] == 'l') &&
              std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            cleaned += ' ';
            i = close + 1;
            continue;
          }
        }
      }
      cleaned += line[i++];
    }
    out += cleaned;
    out += '\n';
  }
  return out;
}

BoilerplateDataset load_boilerplate_dataset(const fs::path& dir, const fs::path& split_manifest, bool clean_gold) {
  BoilerplateDataset d;
  for (const auto& [id, split] : read_split_manifest(split_manifest)) {
    const auto html = dir / (id + ".html");
    const auto gold = dir / (id + ".txt");
    if (!fs::exists(html)) throw SplitMismatch("manifest names missing page '" + id + "'");
    if (!fs::exists(gold)) throw MissingGold("no gold text for '" + id + "'");
    LabeledPage p{id, read_file(html), read_file(gold)};
    if (clean_gold) p.gold = clean_gold_text(p.gold);
    (split == Split::Train ? d.train : split == Split::Dev ? d.dev : d.test).push_back(std::move(p));
  }
  auto by_id = [](const LabeledPage& a, const LabeledPage& b) { return a.page_id < b.page_id; };
  std::sort(d.train.begin(), d.train.end(), by_id);
  std::sort(d.dev.begin(), d.dev.end(), by_id);
  std::sort(d.test.begin(), d.test.end(), by_id);
  return d;
}

GenreDataset load_genre_dataset(const fs::path& dir) {
  GenreDataset d;
  for (const auto& cls : sorted_entries(dir)) {
    if (!fs::is_directory(cls)) continue;
    const std::size_t label = d.classes.size();
    d.classes.push_back(cls.filename().string());
    for (const auto& file : sorted_entries(cls)) {
      if (fs::is_regular_file(file) && is_html(file)) {
        d.pages.push_back({d.classes.back() + "/" + file.stem().string(), read_file(file), label});
      }
    }
  }
  if (d.pages.empty()) throw EmptyCorpus("no genre pages under " + dir.string());
  return d;
}

void write_site_corpus(const fs::path& dir, const std::vector<SynthSitePage>& pages) {
  std::string manifest;
  for (const auto& p : pages) {
    const std::string rel = p.page_id + ".html";
    write_file(dir / rel, p.html);
    manifest += rel + "\t" + p.url + "\n";
  }
  write_file(dir / "manifest.tsv", manifest);
}

void write_boilerplate_corpus(const fs::path& dir, const std::vector<LabeledPage>& pages, double dev_fraction,
                              double test_fraction) {
  auto count = [&](double f) { return static_cast<std::size_t>(f * static_cast<double>(pages.size()) + 0.5); };
  const std::size_t n_test = count(test_fraction), n_dev = count(dev_fraction);
  std::string manifest;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    write_file(dir / (pages[i].page_id + ".html"), pages[i].html);
    write_file(dir / (pages[i].page_id + ".txt"), pages[i].gold);
    const Split s = i + n_test >= pages.size() ? Split::Test : i + n_test + n_dev >= pages.size() ? Split::Dev : Split::Train;
    manifest += pages[i].page_id + "\t" + std::string(split_name(s)) + "\n";
  }
  write_file(dir / "split.tsv", manifest);
}

void write_genre_corpus(const fs::path& dir, const GenreDataset& data) {
  for (const auto& p : data.pages) write_file(dir / (p.page_id + ".html"), p.html);
}

}  // namespace grownup::corpus
