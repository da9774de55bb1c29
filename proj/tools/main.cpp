// grownup: featurize, pre-train, fine-tune and evaluate webpage graph models.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"
#include "grownup/eval/metrics.hpp"
#include "grownup/graph/record.hpp"
#include "grownup/nn/checkpoint.hpp"
#include "grownup/tasks/profiles.hpp"
#include "json.hpp"
#include "settings.hpp"

#ifndef GROWNUP_VERSION
#define GROWNUP_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace grownup;

namespace {

// Errors found while checking arguments, before any work starts; exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::string log_path;
  std::size_t jobs = 0;
};

class Run {
 public:
  Run(std::string command, const Common& common, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)) {
    if (!common.config_file.empty()) settings.merge_file(common.config_file);
    if (const char* env = std::getenv("GROWNUP_SEED")) settings.set("seed", env);
    for (const auto& a : common.assignments) settings.merge_assignment(a);
    if (common.seed) settings.set("seed", std::to_string(*common.seed));
    settings.check_known_keys();
    if (!common.log_path.empty()) {
      file_log_ = std::make_unique<std::ofstream>(common.log_path, std::ios::app);
      if (!*file_log_) throw UsageError("cannot open log file " + common.log_path);
    }
  }

  void log(json event) {
    json line{{"command", command_}};
    line.update(event);
    std::ostream& out = file_log_ ? *file_log_ : std::cerr;
    out << line.dump() << '\n';
    out.flush();
  }

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }

  /// Writes config, code version and content hashes next to `where`.
  void write_manifest(const fs::path& where, json extra = json::object()) const {
    json m{{"command", command_}, {"argv", argv_}, {"version", GROWNUP_VERSION}, {"seed", cli::seed_of(settings)}};
    m["config"] = settings.values();
    m["inputs"] = hashes(inputs_);
    m["outputs"] = hashes(outputs_);
    m["details"] = std::move(extra);
    corpus::write_file(where, m.dump(2) + "\n");
  }

  cli::Settings settings;

 private:
  static json hashes(const std::vector<fs::path>& paths) {
    json out = json::object();
    for (const auto& p : paths) {
      if (fs::is_regular_file(p)) {
        out[p.string()] = graph::sha256_hex(corpus::read_file(p));
      } else if (fs::is_directory(p)) {
        // Directory digest: hash of sorted "relative path\tfile hash" lines.
        std::vector<std::string> lines;
        for (const auto& e : fs::recursive_directory_iterator(p))
          if (e.is_regular_file())
            lines.push_back(fs::relative(e.path(), p).generic_string() + "\t" +
                            graph::sha256_hex(corpus::read_file(e.path())));
        std::sort(lines.begin(), lines.end());
        std::string all;
        for (const auto& l : lines) all += l + "\n";
        out[p.string()] = graph::sha256_hex(all);
      }
    }
    return out;
  }

  std::string command_;
  std::vector<std::string> argv_;
  std::vector<fs::path> inputs_, outputs_;
  std::unique_ptr<std::ofstream> file_log_;
};

fs::path manifest_path(const fs::path& out) {
  return fs::is_directory(out) ? out / "manifest.json" : fs::path(out.string() + ".manifest.json");
}

// Text encoder and tag vocabulary shared by every command that parses HTML.
class Featurizer {
 public:
  Featurizer(const std::string& encoder, const std::string& tags_path) : encoder_(graph::make_encoder(encoder)) {
    if (!tags_path.empty()) custom_tags_ = graph::TagVocabulary::load(tags_path);
  }
  graph::PageGraph operator()(std::string_view html, const std::string& page_id) const {
    return graph::featurize_html(html, *encoder_, tags(), page_id);
  }
  const graph::TagVocabulary& tags() const { return custom_tags_ ? *custom_tags_ : graph::TagVocabulary::default_v1(); }

 private:
  std::unique_ptr<graph::TextEncoder> encoder_;
  std::optional<graph::TagVocabulary> custom_tags_;
};

// ------------------------------------------------------------ graph files

struct GraphSet {
  std::vector<graph::PageGraph> pages;
  std::vector<std::string> site_of;
};

GraphSet load_graph_dir(const fs::path& dir) {
  const auto index = dir / "index.tsv";
  if (!fs::exists(index)) throw UsageError(dir.string() + " has no index.tsv; run featurize first");
  std::istringstream in(corpus::read_file(index));
  GraphSet g;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string id = line.substr(0, tab);
    g.pages.push_back(graph::read_graph_record((dir / (id + ".graph")).string()));
    g.site_of.push_back(tab == std::string::npos ? std::string{} : line.substr(tab + 1));
  }
  if (g.pages.empty()) throw EmptyCorpus(dir.string() + ": no graph records");
  return g;
}

// HTML inputs of featurize: a site manifest, per-site sub-directories, or a
// flat directory of pages that then form a single site.
corpus::SiteGroupedCorpus html_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  auto c = corpus::load_site_corpus(dir);
  if (!c.pages.empty()) return c;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".html" || ext == ".htm"))
      c.pages.push_back({e.path().stem().string(), e.path(), dir.filename().string()});
  }
  std::sort(c.pages.begin(), c.pages.end(), [](const auto& a, const auto& b) { return a.page_id < b.page_id; });
  return c;
}

// Featurized records when the directory has an index.tsv, raw HTML otherwise.
GraphSet load_pretrain_corpus(const fs::path& dir, const Featurizer& featurize) {
  if (fs::exists(dir / "index.tsv")) return load_graph_dir(dir);
  const auto c = html_inputs(dir);
  if (c.pages.empty()) throw EmptyCorpus(dir.string() + ": no HTML pages and no index.tsv");
  GraphSet g;
  for (const auto& p : c.pages) {
    g.pages.push_back(featurize(corpus::read_file(p.html_path), p.page_id));
    g.site_of.push_back(p.site_key);
  }
  return g;
}

// -------------------------------------------------------------- featurize

int cmd_featurize(Run& run, const fs::path& in, const fs::path& out, const Featurizer& featurize, std::size_t jobs) {
  const auto corpus = html_inputs(in);
  if (corpus.pages.empty()) throw EmptyCorpus(in.string() + ": no HTML pages");
  fs::create_directories(out);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, corpus.pages.size());

  // Work queue: each worker claims the next page and writes its own record.
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < corpus.pages.size();) {
      const auto& p = corpus.pages[i];
      try {
        const auto g = featurize(corpus::read_file(p.html_path), p.page_id);
        const auto dst = out / (p.page_id + ".graph");
        fs::create_directories(dst.parent_path());
        graph::write_graph_record(dst.string(), g);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = p.page_id + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw Error("featurize failed on " + first_error);

  std::string index;
  for (const auto& p : corpus.pages) index += p.page_id + "\t" + p.site_key + "\n";
  corpus::write_file(out / "index.tsv", index);
  run.input(in);
  run.output(out / "index.tsv");
  run.log({{"event", "featurized"}, {"pages", corpus.pages.size()}, {"sites", corpus.sites().size()},
           {"jobs", jobs}});
  run.write_manifest(out / "manifest.json", {{"pages", corpus.pages.size()}});
  return 0;
}

// --------------------------------------------------------------- pretrain

json components_json(const pretrain::LossComponents& c) {
  return {{"sim", c.sim}, {"tag", c.tag}, {"text", c.text}, {"id", c.id}, {"class", c.klass}, {"child", c.child}};
}

int cmd_pretrain(Run& run, const fs::path& corpus_dir, const fs::path& out, const std::string& profile_name,
                 const Featurizer& featurize) {
  const auto profile = tasks::pretrain_profile(profile_name);
  model::ModelConfig base;
  base.dropout = profile.dropout;
  const auto cfg = cli::model_config(run.settings, base);
  const auto opts = cli::pretrain_options(run.settings, profile.options);
  const auto data = load_pretrain_corpus(corpus_dir, featurize);
  run.input(corpus_dir);
  run.log({{"event", "start"}, {"profile", profile.name}, {"model", json::parse(cfg.to_json())},
           {"pages", data.pages.size()}, {"epochs", opts.epochs}, {"batch_pairs", opts.batch_pairs},
           {"lr", opts.lr}, {"readout", cli::readout_name(opts.readout)}, {"dev_fraction", opts.dev_fraction}});
  const auto r = pretrain::pretrain_run(data.pages, data.site_of, cfg, opts, [&](const pretrain::EpochLog& e) {
    run.log({{"event", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss},
             {"components", components_json(e.train_components)}, {"dev_loss", e.dev_loss},
             {"dev_accuracy", e.dev_accuracy}, {"zero_targets", e.zero_targets}});
  });
  nn::Checkpoint ck;
  ck.metadata_json = json{{"kind", "pretrain"},
                          {"model", json::parse(cfg.to_json())},
                          {"schema", data.pages.front().schema},
                          {"best_epoch", r.best_epoch},
                          {"best_dev_loss", r.best_dev_loss}}
                         .dump();
  ck.params = r.best_extractor;
  nn::save_checkpoint(out.string(), ck);
  run.output(out);
  run.log({{"event", "done"}, {"best_epoch", r.best_epoch}, {"best_dev_loss", r.best_dev_loss}});
  run.write_manifest(manifest_path(out), {{"model", json::parse(cfg.to_json())}, {"profile", profile.name},
                                         {"best_epoch", r.best_epoch}, {"best_dev_loss", r.best_dev_loss}});
  return 0;
}

// ---------------------------------------------------------- checkpoints

struct LoadedModel {
  json meta;
  model::ModelConfig config;
  nn::ParamMap params;
};

LoadedModel load_model(const fs::path& path) {
  auto ck = nn::load_checkpoint(path.string());
  LoadedModel m;
  m.meta = json::parse(ck.metadata_json);
  m.config = model::ModelConfig::from_json(m.meta.at("model").dump());
  m.params = std::move(ck.params);
  return m;
}

// The architecture of a warm start comes from its checkpoint; dropout may
// still be set per task.
model::ModelConfig warm_config(const cli::Settings& s, const LoadedModel& init, double dropout) {
  auto c = init.config;
  c.dropout = s.get("model.dropout", dropout);
  const auto asked = cli::model_config(s, init.config);
  if (asked.S != c.S || asked.T != c.T || asked.K != c.K || asked.N_h != c.N_h)
    throw InvalidConfig("model.* settings disagree with the architecture stored in the --init checkpoint");
  c.validate();
  return c;
}

std::vector<tasks::BoilerplateExample> to_examples(const std::vector<corpus::LabeledPage>& pages,
                                                   const Featurizer& featurize) {
  std::vector<tasks::BoilerplateExample> out;
  for (const auto& p : pages)
    out.push_back({featurize(p.html, p.page_id), p.gold});
  return out;
}

// ------------------------------------------------- finetune-boilerplate

int cmd_finetune_boilerplate(Run& run, const fs::path& data, fs::path split, const fs::path& out,
                             const std::string& init_path, const std::string& profile_name,
                             const Featurizer& featurize) {
  const auto profile = tasks::boilerplate_profile(profile_name);
  std::optional<LoadedModel> init;
  if (!init_path.empty()) {
    init = load_model(init_path);
    run.input(init_path);
  }
  model::ModelConfig base;
  base.dropout = profile.dropout;
  const auto cfg = init ? warm_config(run.settings, *init, profile.dropout) : cli::model_config(run.settings, base);
  const auto opts = cli::finetune_options(run.settings, profile.options);
  if (split.empty()) split = data / "split.tsv";
  auto ds = corpus::load_boilerplate_dataset(data, split);
  run.input(data);

  // Without a dev split, hold out the recipe's dev share of train.
  std::size_t carved = 0;
  if (ds.dev.empty() && ds.train.size() >= 2) {
    const double share = static_cast<double>(profile.n_dev) / static_cast<double>(profile.n_train + profile.n_dev);
    carved = std::max<std::size_t>(1, static_cast<std::size_t>(share * static_cast<double>(ds.train.size()) + 0.5));
    nn::Rng rng(opts.seed);
    rng.shuffle(ds.train);
    ds.dev.assign(ds.train.end() - static_cast<std::ptrdiff_t>(carved), ds.train.end());
    ds.train.resize(ds.train.size() - carved);
  }
  const auto train = to_examples(ds.train, featurize), dev = to_examples(ds.dev, featurize);
  run.log({{"event", "start"}, {"profile", profile.name}, {"model", json::parse(cfg.to_json())},
           {"train_pages", train.size()}, {"dev_pages", dev.size()}, {"dev_carved_from_train", carved},
           {"recipe_split", std::to_string(profile.n_train) + "/" + std::to_string(profile.n_dev)},
           {"lr", opts.lr}, {"weight_decay", opts.weight_decay}, {"dropout", cfg.dropout},
           {"label_smoothing", opts.label_smoothing}, {"batch_nodes", opts.batch_nodes}, {"epochs", opts.epochs},
           {"pretrained", init.has_value()}});
  const auto r = tasks::finetune_boilerplate(train, dev, cfg, init ? &init->params : nullptr, opts,
                                             [&](const tasks::FinetuneEpoch& e) {
                                               json l{{"event", "epoch"}, {"epoch", e.epoch},
                                                      {"train_loss", e.train_loss}, {"dev_f1", e.dev_f1}};
                                               if (e.train_f1) l["train_f1"] = *e.train_f1;
                                               run.log(l);
                                             });
  nn::Checkpoint ck;
  ck.metadata_json = json{{"kind", "boilerplate"},
                          {"model", json::parse(cfg.to_json())},
                          {"threshold", opts.threshold},
                          {"best_epoch", r.best_epoch},
                          {"best_dev_f1", r.best_dev_f1}}
                         .dump();
  ck.params = r.extractor;
  ck.params.insert(r.head.begin(), r.head.end());
  nn::save_checkpoint(out.string(), ck);
  run.output(out);
  run.log({{"event", "done"}, {"best_epoch", r.best_epoch}, {"best_dev_f1", r.best_dev_f1}});
  run.write_manifest(manifest_path(out), {{"model", json::parse(cfg.to_json())}, {"profile", profile.name},
                                         {"lr", opts.lr}, {"weight_decay", opts.weight_decay},
                                         {"best_epoch", r.best_epoch}, {"best_dev_f1", r.best_dev_f1}});
  return 0;
}

// ---------------------------------------------------------------- extract

int cmd_extract(Run& run, const fs::path& model_path, const fs::path& in, const fs::path& out,
                const std::string& split, const Featurizer& featurize) {
  const auto m = load_model(model_path);
  if (m.meta.value("kind", "") != "boilerplate") throw UsageError(model_path.string() + " is not a boilerplate model");
  model::Extractor<float> ex(m.config, 0);
  ex.parameters().import_values(m.params);
  tasks::BoilerplateHead<float> head(m.config.K, 0);
  head.store.import_values(m.params);
  head.threshold = m.meta.value("threshold", 0.5);

  std::vector<std::string> ids;
  if (split != "all") {
    const auto want = corpus::parse_split(split);
    for (const auto& [id, s] : corpus::read_split_manifest(in / "split.tsv"))
      if (s == want) ids.push_back(id);
  } else {
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_regular_file() && e.path().extension() == ".html") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  fs::create_directories(out);
  for (const auto& id : ids) {
    const auto g = featurize(corpus::read_file(in / (id + ".html")), id);
    corpus::write_file(out / (id + ".txt"), tasks::extract_text(g, ex, head) + "\n");
  }
  run.input(model_path);
  run.input(in);
  run.output(out);
  run.log({{"event", "extracted"}, {"pages", ids.size()}, {"split", split}});
  run.write_manifest(out / "manifest.json", {{"pages", ids.size()}});
  return 0;
}

// --------------------------------------------------------------- evaluate

int cmd_evaluate(Run& run, const fs::path& pred, const fs::path& gold, const fs::path& report_path,
                 const std::string& split, bool raw_gold) {
  std::set<std::string> pred_ids, gold_ids;
  for (const auto& e : fs::directory_iterator(pred))
    if (e.is_regular_file() && e.path().extension() == ".txt") pred_ids.insert(e.path().stem().string());
  if (split != "all") {
    const auto want = corpus::parse_split(split);
    for (const auto& [id, s] : corpus::read_split_manifest(gold / "split.tsv"))
      if (s == want) gold_ids.insert(id);
  } else {
    for (const auto& e : fs::directory_iterator(gold))
      if (e.is_regular_file() && e.path().extension() == ".txt") gold_ids.insert(e.path().stem().string());
  }
  if (pred_ids != gold_ids) {
    std::vector<std::string> only_pred, only_gold;
    std::set_difference(pred_ids.begin(), pred_ids.end(), gold_ids.begin(), gold_ids.end(),
                        std::back_inserter(only_pred));
    std::set_difference(gold_ids.begin(), gold_ids.end(), pred_ids.begin(), pred_ids.end(),
                        std::back_inserter(only_gold));
    throw Error("prediction/gold mismatch: " + std::to_string(pred_ids.size()) + " predictions, " +
                std::to_string(gold_ids.size()) + " gold pages" +
                (only_pred.empty() ? "" : "; no gold for " + only_pred.front()) +
                (only_gold.empty() ? "" : "; no prediction for " + only_gold.front()));
  }
  std::vector<eval::PrecisionRecall> per_page;
  json pages = json::array();
  for (const auto& id : pred_ids) {
    const auto gpath = gold / (id + ".txt");
    if (!fs::exists(gpath)) throw MissingGold("no gold text " + gpath.string());
    auto g = corpus::read_file(gpath);
    if (!raw_gold) g = corpus::clean_gold_text(g);
    const auto pr = eval::lcs_precision_recall(corpus::read_file(pred / (id + ".txt")), g);
    per_page.push_back(pr);
    pages.push_back({{"page_id", id}, {"precision", pr.precision}, {"recall", pr.recall}});
  }
  const auto rep = eval::corpus_f1(per_page);
  const json report{{"metric", "LCS token F1 of page-averaged precision and recall (Micro-F1)"},
                    {"n_pages", rep.n_pages},
                    {"corpus_precision", rep.corpus_precision},
                    {"corpus_recall", rep.corpus_recall},
                    {"corpus_f1", rep.corpus_f1},
                    {"per_page", pages}};
  corpus::write_file(report_path, report.dump(2) + "\n");
  run.input(pred);
  run.input(gold);
  run.output(report_path);
  run.log({{"event", "evaluated"}, {"n_pages", rep.n_pages}, {"corpus_f1", rep.corpus_f1}});
  run.write_manifest(manifest_path(report_path));
  return 0;
}

// ------------------------------------------------------------------ genre

struct GenreData {
  std::vector<std::string> classes;
  std::vector<graph::PageGraph> pages;
  std::vector<std::size_t> labels;
};

GenreData load_genre(const fs::path& dir, const Featurizer& featurize) {
  const auto ds = corpus::load_genre_dataset(dir);
  GenreData g{ds.classes, {}, {}};
  for (const auto& p : ds.pages) {
    g.pages.push_back(featurize(p.html, p.page_id));
    g.labels.push_back(p.label);
  }
  if (g.pages.empty()) throw EmptyCorpus(dir.string() + ": no pages");
  return g;
}

struct GenreSetup {
  tasks::GenreProfile profile;
  model::ModelConfig config;
  tasks::GenreOptions options;
  std::optional<LoadedModel> init;
};

GenreSetup genre_setup(Run& run, const std::string& profile_name, const std::string& init_path) {
  GenreSetup s{tasks::genre_profile(profile_name), {}, {}, {}};
  if (!init_path.empty()) {
    s.init = load_model(init_path);
    run.input(init_path);
  }
  s.config = s.init ? warm_config(run.settings, *s.init, s.profile.dropout) : cli::model_config(run.settings, s.profile.model);
  auto base = s.profile.options;
  if (s.config.T == 0 && !run.settings.has("genre.readout")) base.readout = model::Readout::Mean;
  s.options = cli::genre_options(run.settings, base);
  return s;
}

json genre_start(const GenreSetup& s, const GenreData& d) {
  return {{"event", "start"},
          {"profile", s.profile.name},
          {"model", json::parse(s.config.to_json())},
          {"pages", d.pages.size()},
          {"classes", d.classes},
          {"lr", s.options.lr},
          {"restart_t0", s.options.restart_t0},
          {"scale", s.options.scale},
          {"margin", s.options.margin},
          {"readout", cli::readout_name(s.options.readout)},
          {"epochs", s.options.epochs},
          {"pretrained", s.init.has_value()}};
}

int cmd_finetune_genre(Run& run, const fs::path& data, const fs::path& out, const std::string& profile_name,
                       const std::string& init_path, const Featurizer& featurize) {
  auto s = genre_setup(run, profile_name, init_path);
  const auto d = load_genre(data, featurize);
  run.input(data);
  run.log(genre_start(s, d));
  tasks::GenreModel m(s.config, d.classes.size(), s.options, s.options.seed);
  if (s.init) m.extractor.parameters().import_values(s.init->params);
  std::vector<std::size_t> all(d.pages.size());
  std::iota(all.begin(), all.end(), 0);
  tasks::train_genre(m, d.pages, d.labels, all, s.options, [&](const tasks::GenreEpoch& e) {
    run.log({{"event", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"lr", e.lr}});
  });
  const double acc = tasks::genre_accuracy(m, d.pages, d.labels, all);
  nn::Checkpoint ck;
  ck.metadata_json = json{{"kind", "genre"},
                          {"model", json::parse(s.config.to_json())},
                          {"classes", d.classes},
                          {"scale", s.options.scale},
                          {"margin", s.options.margin},
                          {"readout", cli::readout_name(s.options.readout)},
                          {"train_accuracy", acc}}
                         .dump();
  ck.params = m.extractor.parameters().export_values();
  const auto head = m.head.store.export_values();
  ck.params.insert(head.begin(), head.end());
  nn::save_checkpoint(out.string(), ck);
  run.output(out);
  run.log({{"event", "done"}, {"train_accuracy", acc}});
  auto details = genre_start(s, d);
  details.erase("event");
  details["train_accuracy"] = acc;
  run.write_manifest(manifest_path(out), details);
  return 0;
}

int cmd_cv(Run& run, const fs::path& data, const fs::path& report_path, const std::string& profile_name,
           const std::string& init_path, std::optional<std::size_t> folds_flag, std::optional<std::size_t> repeats_flag,
           const Featurizer& featurize) {
  auto s = genre_setup(run, profile_name, init_path);
  const std::size_t folds = folds_flag.value_or(run.settings.get("cv.folds", s.profile.n_folds));
  const std::size_t repeats = repeats_flag.value_or(run.settings.get("cv.repeats", s.profile.repeats));
  const auto d = load_genre(data, featurize);
  run.input(data);
  auto start = genre_start(s, d);
  start["folds"] = folds;
  start["repeats"] = repeats;
  run.log(start);
  const auto r = tasks::kfold_cv(d.pages, d.labels, d.classes.size(), s.config, s.init ? &s.init->params : nullptr,
                                 s.options, folds, repeats, [&](const tasks::FoldResult& f) {
                                   run.log({{"event", "fold"}, {"repeat", f.repeat}, {"fold", f.fold},
                                            {"n_train", f.n_train}, {"n_test", f.n_test}, {"accuracy", f.accuracy}});
                                 });
  json folds_json = json::array();
  for (const auto& f : r.folds)
    folds_json.push_back({{"repeat", f.repeat}, {"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test},
                          {"accuracy", f.accuracy}});
  const json report{{"profile", s.profile.name},
                    {"classes", d.classes},
                    {"n_pages", d.pages.size()},
                    {"n_folds", folds},
                    {"repeats", repeats},
                    {"mean_accuracy", r.mean_accuracy},
                    {"std_accuracy", r.std_accuracy},
                    {"folds", folds_json}};
  corpus::write_file(report_path, report.dump(2) + "\n");
  run.output(report_path);
  run.log({{"event", "done"}, {"mean_accuracy", r.mean_accuracy}, {"std_accuracy", r.std_accuracy},
           {"fold_results", r.folds.size()}});
  start.erase("event");
  start["mean_accuracy"] = r.mean_accuracy;
  run.write_manifest(manifest_path(report_path), start);
  return 0;
}

// ------------------------------------------------------------------ synth

int cmd_synth(Run& run, const std::string& kind, std::size_t pages, std::size_t sites, std::size_t genres,
              double dev_fraction, double test_fraction, const fs::path& out) {
  const auto seed = cli::seed_of(run.settings);
  fs::create_directories(out);
  if (kind == "sites") {
    corpus::write_site_corpus(out, corpus::synth_site_corpus(pages, sites, seed));
  } else if (kind == "boilerplate") {
    corpus::write_boilerplate_corpus(out, corpus::synth_boilerplate_corpus(pages, seed), dev_fraction, test_fraction);
  } else if (kind == "genre") {
    corpus::write_genre_corpus(out, corpus::synth_genre_corpus(pages, genres, seed));
  } else {
    throw UsageError("--kind must be sites, boilerplate or genre");
  }
  run.output(out);
  run.log({{"event", "synthesized"}, {"kind", kind}, {"pages", pages}, {"seed", seed}});
  run.write_manifest(out / "manifest.json", {{"kind", kind}, {"pages", pages}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Webpage graph feature extractor: featurize, pre-train, fine-tune, evaluate."};
  app.require_subcommand(1);
  app.set_version_flag("--version", GROWNUP_VERSION);
  const std::vector<std::string> args(argv, argv + argc);

  Common common;
  std::string encoder = "hashed", tags;
  auto add_features = [&](CLI::App* sub) {
    sub->add_option("--encoder", encoder, "Text encoder: hashed or sidecar:<path>");
    sub->add_option("--tags", tags, "Tag vocabulary file (83 tags, one per line)")->check(CLI::ExistingFile);
  };
  std::optional<std::string> pre_epochs, pre_batch_pairs, pre_lr, pre_readout;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_file, "Config file of key=value lines (e.g. model.S=5)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", common.assignments, "Override one config key, key=value (repeatable)");
    sub->add_option("--seed", common.seed, "Run seed (overrides GROWNUP_SEED and the config file)");
    sub->add_option("--log", common.log_path, "Append JSON-lines logs here instead of stderr");
  };

  std::string in, out, graphs, data, split_manifest, init, pre_profile, bp_profile, genre_profile, model_path, pred, gold, report, kind = "sites",
                                                                                                   split;
  std::size_t jobs = 0, pages = 100, sites = 10, genres = 3;
  double dev_fraction = 0.1, test_fraction = 0.0;
  std::optional<std::size_t> folds, repeats;
  bool raw_gold = false;

  auto* featurize = app.add_subcommand("featurize", "HTML pages to graph records (one .graph file per page)");
  featurize->add_option("--in", in, "Directory of pages: manifest.tsv, per-site folders or flat .html files")
      ->required()->check(CLI::ExistingDirectory);
  featurize->add_option("--out", out, "Output directory")->required();
  featurize->add_option("--jobs", jobs, "Featurizer threads (default: all cores)");
  add_features(featurize);
  add_common(featurize);

  auto* pre = app.add_subcommand("pretrain", "Self-supervised pre-training on a site-grouped corpus");
  pre->add_option("--corpus,--graphs", graphs, "Featurized directory (index.tsv) or HTML pages grouped by site")
      ->required()->check(CLI::ExistingDirectory);
  pre->add_option("--epochs", pre_epochs, "Same as --set pretrain.epochs=N");
  pre->add_option("--batch-pairs", pre_batch_pairs, "Same as --set pretrain.batch_pairs=N");
  pre->add_option("--lr", pre_lr, "Same as --set pretrain.lr=X");
  pre->add_option("--readout", pre_readout, "Same as --set pretrain.readout=mean|cls");
  add_features(pre);
  pre->add_option("--out", out, "Checkpoint path")->required();
  pre->add_option("--profile", pre_profile, "Hyperparameter preset")->default_val("pretrain-default");
  add_common(pre);

  auto* ftb = app.add_subcommand("finetune-boilerplate", "Fine-tune content/boilerplate node classification");
  ftb->add_option("--data", data, "Directory of <name>.html/<name>.txt pairs")->required()->check(CLI::ExistingDirectory);
  ftb->add_option("--split-manifest", split_manifest, "Split manifest (default: <data>/split.tsv)");
  ftb->add_option("--init", init, "Pre-trained checkpoint")->check(CLI::ExistingFile);
  ftb->add_option("--out", out, "Checkpoint path")->required();
  ftb->add_option("--profile", bp_profile, "cleaneval or dragnet")->default_val("cleaneval");
  add_features(ftb);
  add_common(ftb);

  auto* ext = app.add_subcommand("extract", "Write the extracted main text of each page");
  ext->add_option("--model", model_path, "Boilerplate checkpoint")->required()->check(CLI::ExistingFile);
  ext->add_option("--in", in, "Directory of .html pages")->required()->check(CLI::ExistingDirectory);
  ext->add_option("--out", out, "Output directory of <name>.txt")->required();
  ext->add_option("--split", split, "train, dev, test (from <in>/split.tsv) or all")->default_val("all");
  add_features(ext);
  add_common(ext);

  auto* ftg = app.add_subcommand("finetune-genre", "Fine-tune genre classification on a whole dataset");
  ftg->add_option("--data", data, "One directory per genre")->required()->check(CLI::ExistingDirectory);
  ftg->add_option("--init", init, "Pre-trained checkpoint")->check(CLI::ExistingFile);
  ftg->add_option("--out", out, "Checkpoint path")->required();
  ftg->add_option("--profile", genre_profile, "7web or ki04")->default_val("7web");
  add_features(ftg);
  add_common(ftg);

  auto* cv = app.add_subcommand("cv", "Repeated stratified K-fold cross-validation of genre classification");
  cv->add_option("--data", data, "One directory per genre")->required()->check(CLI::ExistingDirectory);
  cv->add_option("--init", init, "Pre-trained checkpoint")->check(CLI::ExistingFile);
  cv->add_option("--report", report, "JSON report path")->required();
  cv->add_option("--profile", genre_profile, "7web or ki04")->default_val("7web");
  cv->add_option("--folds", folds, "Folds per repeat (default 10)");
  cv->add_option("--repeats", repeats, "Repeats with fresh folds (default 3)");
  add_features(cv);
  add_common(cv);

  auto* ev = app.add_subcommand("evaluate", "LCS precision/recall/F1 of extracted texts");
  ev->add_option("--pred", pred, "Directory of <name>.txt predictions")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--gold", gold, "Directory of <name>.txt gold texts")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--report", report, "JSON report path")->required();
  ev->add_option("--split", split, "Restrict gold to one split of <gold>/split.tsv")->default_val("all");
  ev->add_flag("--raw-gold", raw_gold, "Skip CleanEval gold clean-up");
  add_common(ev);

  auto* syn = app.add_subcommand("synth", "Write a deterministic synthetic corpus");
  syn->add_option("--kind", kind, "sites, boilerplate or genre")->default_val("sites");
  syn->add_option("--pages", pages, "Number of pages")->default_val(100);
  syn->add_option("--sites", sites, "Websites (sites corpus)")->default_val(10);
  syn->add_option("--genres", genres, "Genres (genre corpus, at most 8)")->default_val(3);
  syn->add_option("--dev-fraction", dev_fraction, "Dev share (boilerplate corpus)")->default_val(0.1);
  syn->add_option("--test-fraction", test_fraction, "Test share (boilerplate corpus)")->default_val(0.25);
  syn->add_option("--out", out, "Output directory")->required();
  add_common(syn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  std::unique_ptr<Run> run;
  try {
    run = std::make_unique<Run>(name, common, args);
  } catch (const std::exception& e) {
    std::cerr << "grownup " << name << ": " << e.what() << "\n";
    return 2;
  }
  for (const auto& [key, flag] : {std::pair{"pretrain.epochs", &pre_epochs}, {"pretrain.batch_pairs", &pre_batch_pairs},
                                  {"pretrain.lr", &pre_lr}, {"pretrain.readout", &pre_readout}})
    if (*flag) run->settings.set(key, **flag);
  try {
    const Featurizer featurize(encoder, tags);
    if (name == "featurize") return cmd_featurize(*run, in, out, featurize, jobs);
    if (name == "pretrain") return cmd_pretrain(*run, graphs, out, pre_profile, featurize);
    if (name == "finetune-boilerplate")
      return cmd_finetune_boilerplate(*run, data, split_manifest, out, init, bp_profile, featurize);
    if (name == "extract") return cmd_extract(*run, model_path, in, out, split, featurize);
    if (name == "finetune-genre") return cmd_finetune_genre(*run, data, out, genre_profile, init, featurize);
    if (name == "cv") return cmd_cv(*run, data, report, genre_profile, init, folds, repeats, featurize);
    if (name == "evaluate") return cmd_evaluate(*run, pred, gold, report, split, raw_gold);
    if (name == "synth") return cmd_synth(*run, kind, pages, sites, genres, dev_fraction, test_fraction, out);
  } catch (const UsageError& e) {
    std::cerr << "grownup " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const InvalidConfig& e) {
    std::cerr << "grownup " << name << ": invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "grownup " << name << ": error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
