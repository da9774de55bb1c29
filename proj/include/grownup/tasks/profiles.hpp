#pragma once

// Named hyperparameter presets for each experiment recipe.

#include <string>
#include <string_view>
#include <vector>

#include "grownup/model/extractor.hpp"
#include "grownup/pretrain/pretrain.hpp"
#include "grownup/tasks/boilerplate.hpp"
#include "grownup/tasks/genre.hpp"

namespace grownup::tasks {

struct BoilerplateProfile {
  std::string name;
  std::size_t n_train = 0;  // train/dev split sizes of the recipe
  std::size_t n_dev = 0;
  double dropout = 0;
  FinetuneOptions options;
};

struct GenreProfile {
  std::string name;
  std::size_t n_classes = 0;
  std::size_t n_pages = 0;
  double dropout = 0;
  model::ModelConfig model;
  GenreOptions options;
  std::size_t n_folds = 10;
  std::size_t repeats = 3;
};

struct PretrainProfile {
  std::string name;
  double dropout = 0;
  pretrain::PretrainOptions options;
};

/// Throw InvalidConfig for an unknown name.
BoilerplateProfile boilerplate_profile(std::string_view name);
GenreProfile genre_profile(std::string_view name);
PretrainProfile pretrain_profile(std::string_view name);

std::vector<std::string> profile_names();

}  // namespace grownup::tasks
