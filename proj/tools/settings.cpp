#include "settings.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include "grownup/corpus/corpus.hpp"
#include "grownup/errors.hpp"

namespace grownup::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "seed",
      "model.S", "model.T", "model.K", "model.N_h", "model.dropout",
      "pretrain.epochs", "pretrain.batch_pairs", "pretrain.lr", "pretrain.dev_fraction", "pretrain.M",
      "pretrain.mask_prob", "pretrain.sim_width", "pretrain.dev_partners", "pretrain.readout",
      "pretrain.weights.sim", "pretrain.weights.tag", "pretrain.weights.text", "pretrain.weights.id",
      "pretrain.weights.class", "pretrain.weights.child",
      "finetune.epochs", "finetune.batch_nodes", "finetune.lr", "finetune.weight_decay",
      "finetune.label_smoothing", "finetune.threshold",
      "genre.epochs", "genre.batch_pages", "genre.lr", "genre.weight_decay", "genre.restart_t0",
      "genre.restart_mult", "genre.scale", "genre.margin", "genre.readout", "genre.freeze_backbone",
      "cv.folds", "cv.repeats",
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void Settings::merge_file(const std::string& path) {
  std::istringstream in(corpus::read_file(path));
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      merge_assignment(line);
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(path + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void Settings::merge_assignment(std::string_view a) {
  const auto eq = a.find('=');
  if (eq == std::string_view::npos) throw InvalidConfig("expected key=value, got '" + std::string(a) + "'");
  const auto key = trim(a.substr(0, eq));
  if (key.empty()) throw InvalidConfig("empty key in '" + std::string(a) + "'");
  set(key, trim(a.substr(eq + 1)));
}

void Settings::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Settings::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Settings::get(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (it->second.empty() || *end != '\0') throw InvalidConfig(key + ": not a number: '" + it->second + "'");
  return v;
}

std::size_t Settings::get(const std::string& key, std::size_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t v = 0;
  const auto& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw InvalidConfig(key + ": not a non-negative integer: '" + s + "'");
  return v;
}

bool Settings::get(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw InvalidConfig(key + ": expected true or false, got '" + it->second + "'");
}

void Settings::check_known_keys() const {
  for (const auto& [k, v] : values_)
    if (!known_keys().count(k)) throw InvalidConfig("unknown config key '" + k + "'");
}

std::uint64_t seed_of(const Settings& s) {
  const auto v = s.get("seed", std::size_t{1});
  return static_cast<std::uint64_t>(v);
}

model::Readout parse_readout(std::string_view name) {
  if (name == "mean") return model::Readout::Mean;
  if (name == "cls") return model::Readout::Cls;
  throw InvalidConfig("readout must be 'mean' or 'cls', got '" + std::string(name) + "'");
}

std::string_view readout_name(model::Readout r) { return r == model::Readout::Cls ? "cls" : "mean"; }

model::ModelConfig model_config(const Settings& s, model::ModelConfig c) {
  c.S = s.get("model.S", c.S);
  c.T = s.get("model.T", c.T);
  c.K = s.get("model.K", c.K);
  c.N_h = s.get("model.N_h", c.N_h);
  c.dropout = s.get("model.dropout", c.dropout);
  c.validate();
  return c;
}

pretrain::PretrainOptions pretrain_options(const Settings& s, pretrain::PretrainOptions o) {
  o.epochs = s.get("pretrain.epochs", o.epochs);
  o.batch_pairs = s.get("pretrain.batch_pairs", o.batch_pairs);
  o.lr = s.get("pretrain.lr", o.lr);
  o.dev_fraction = s.get("pretrain.dev_fraction", o.dev_fraction);
  o.M = s.get("pretrain.M", o.M);
  o.mask_prob = s.get("pretrain.mask_prob", o.mask_prob);
  o.sim_width = s.get("pretrain.sim_width", o.sim_width);
  o.dev_partners = s.get("pretrain.dev_partners", o.dev_partners);
  o.readout = parse_readout(s.get("pretrain.readout", std::string(readout_name(o.readout))));
  o.weights.sim = s.get("pretrain.weights.sim", o.weights.sim);
  o.weights.tag = s.get("pretrain.weights.tag", o.weights.tag);
  o.weights.text = s.get("pretrain.weights.text", o.weights.text);
  o.weights.id = s.get("pretrain.weights.id", o.weights.id);
  o.weights.klass = s.get("pretrain.weights.class", o.weights.klass);
  o.weights.child = s.get("pretrain.weights.child", o.weights.child);
  o.seed = seed_of(s);
  if (o.mask_prob < 0 || o.mask_prob > 1) throw InvalidConfig("pretrain.mask_prob must be in [0, 1]");
  if (o.dev_fraction < 0 || o.dev_fraction >= 1) throw InvalidConfig("pretrain.dev_fraction must be in [0, 1)");
  return o;
}

tasks::FinetuneOptions finetune_options(const Settings& s, tasks::FinetuneOptions o) {
  o.epochs = s.get("finetune.epochs", o.epochs);
  o.batch_nodes = s.get("finetune.batch_nodes", o.batch_nodes);
  o.lr = s.get("finetune.lr", o.lr);
  o.weight_decay = s.get("finetune.weight_decay", o.weight_decay);
  o.label_smoothing = s.get("finetune.label_smoothing", o.label_smoothing);
  o.threshold = s.get("finetune.threshold", o.threshold);
  o.seed = seed_of(s);
  return o;
}

tasks::GenreOptions genre_options(const Settings& s, tasks::GenreOptions o) {
  o.epochs = s.get("genre.epochs", o.epochs);
  o.batch_pages = s.get("genre.batch_pages", o.batch_pages);
  o.lr = s.get("genre.lr", o.lr);
  o.weight_decay = s.get("genre.weight_decay", o.weight_decay);
  o.restart_t0 = s.get("genre.restart_t0", o.restart_t0);
  o.restart_mult = s.get("genre.restart_mult", o.restart_mult);
  o.scale = s.get("genre.scale", o.scale);
  o.margin = s.get("genre.margin", o.margin);
  o.readout = parse_readout(s.get("genre.readout", std::string(readout_name(o.readout))));
  o.freeze_backbone = s.get("genre.freeze_backbone", o.freeze_backbone);
  o.seed = seed_of(s);
  return o;
}

}  // namespace grownup::cli
