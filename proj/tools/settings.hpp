#pragma once

// Flat dotted-key configuration: profile defaults, then a config file, then
// GROWNUP_SEED, then --set/--seed flags.

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "grownup/model/extractor.hpp"
#include "grownup/pretrain/pretrain.hpp"
#include "grownup/tasks/boilerplate.hpp"
#include "grownup/tasks/genre.hpp"

namespace grownup::cli {

class Settings {
 public:
  /// "key = value" lines; '#' starts a comment. Throws InvalidConfig.
  void merge_file(const std::string& path);
  /// "key=value". Throws InvalidConfig.
  void merge_assignment(std::string_view assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  std::size_t get(const std::string& key, std::size_t fallback) const;
  bool get(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Throws InvalidConfig naming the first key that no command understands.
  void check_known_keys() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t seed_of(const Settings& s);

/// Settings layered over the given defaults.
model::ModelConfig model_config(const Settings& s, model::ModelConfig base = {});
pretrain::PretrainOptions pretrain_options(const Settings& s, pretrain::PretrainOptions base);
tasks::FinetuneOptions finetune_options(const Settings& s, tasks::FinetuneOptions base);
tasks::GenreOptions genre_options(const Settings& s, tasks::GenreOptions base);

model::Readout parse_readout(std::string_view name);
std::string_view readout_name(model::Readout r);

}  // namespace grownup::cli
