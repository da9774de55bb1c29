#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace grownup::corpus {

namespace fs = std::filesystem;

/// Registrable domain plus first path segment, lowercased: scheme, port,
/// userinfo, query and fragment are ignored. Throws MalformedUrl.
std::string site_key(std::string_view url);

/// site_key applied to every URL.
std::vector<std::string> pair_by_url_subpath(const std::vector<std::string>& urls);

struct SitePage {
  std::string page_id;
  fs::path html_path;
  std::string site_key;
};

/// Pages grouped by website, sorted by page_id.
struct SiteGroupedCorpus {
  std::vector<SitePage> pages;

  std::vector<std::string> sites() const;
};

/// One sub-directory per website, HTML files inside (*.html, *.htm).
SiteGroupedCorpus load_site_directory(const fs::path& dir);
/// Manifest lines "<relative html path>\t<url>"; site keys come from the URLs.
SiteGroupedCorpus load_site_manifest(const fs::path& manifest);
/// Manifest when dir/manifest.tsv exists, otherwise directory grouping.
SiteGroupedCorpus load_site_corpus(const fs::path& dir);

enum class Split { Train, Dev, Test };
std::string_view split_name(Split s);
Split parse_split(std::string_view s);

struct LabeledPage {
  std::string page_id;
  std::string html;
  std::string gold;
};

struct BoilerplateDataset {
  std::vector<LabeledPage> train, dev, test;
};

/// Split manifest: one "<page_id>\t<train|dev|test>" per line. Throws
/// SplitMismatch for a page named twice or with no HTML file, MissingGold
/// for a page without its .txt.
std::vector<std::pair<std::string, Split>> read_split_manifest(const fs::path& path);
BoilerplateDataset load_boilerplate_dataset(const fs::path& dir, const fs::path& split_manifest,
                                            bool clean_gold = true);

/// Drops a leading "URL:" line and the <p>/<h>/<l> style paragraph markers
/// used by CleanEval gold files.
std::string clean_gold_text(std::string_view text);

struct GenrePage {
  std::string page_id;
  std::string html;
  std::size_t label;
};

struct GenreDataset {
  std::vector<std::string> classes;  // sorted directory names
  std::vector<GenrePage> pages;
};

/// One directory per class.
GenreDataset load_genre_dataset(const fs::path& dir);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view data);

// Synthetic corpora. All are deterministic functions of their arguments.

struct SynthSitePage {
  std::string page_id;
  std::string url;
  std::string site_key;
  std::string html;
};

/// `pages` pages spread round-robin over `sites` websites, each site with
/// its own layout, class/id vocabulary and word list.
std::vector<SynthSitePage> synth_site_corpus(std::size_t pages, std::size_t sites, std::uint64_t seed);

/// Pages with navigation, sidebars and footers around an article; the gold
/// text is the article paragraphs.
std::vector<LabeledPage> synth_boilerplate_corpus(std::size_t pages, std::uint64_t seed);

/// Genre is carried by a distinctive tag pattern (product tables, articles,
/// threaded lists, forms, galleries, ...).
GenreDataset synth_genre_corpus(std::size_t pages, std::size_t genres, std::uint64_t seed);

void write_site_corpus(const fs::path& dir, const std::vector<SynthSitePage>& pages);
/// Writes <id>.html, <id>.txt and split.tsv; the last pages form test, the
/// ones before them dev.
void write_boilerplate_corpus(const fs::path& dir, const std::vector<LabeledPage>& pages, double dev_fraction = 0.1,
                              double test_fraction = 0.0);
void write_genre_corpus(const fs::path& dir, const GenreDataset& data);

}  // namespace grownup::corpus
