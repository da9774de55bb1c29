#include "grownup/tasks/profiles.hpp"

#include "grownup/errors.hpp"

namespace grownup::tasks {

BoilerplateProfile boilerplate_profile(std::string_view name) {
  BoilerplateProfile p;
  p.name = std::string(name);
  if (name == "cleaneval") {
    p.n_train = 53, p.n_dev = 5, p.dropout = 0.3;
    p.options.lr = 0.002, p.options.weight_decay = 1e-4;
  } else if (name == "dragnet") {
    p.n_train = 869, p.n_dev = 97, p.dropout = 0.0;
    p.options.lr = 0.001, p.options.weight_decay = 1e-4;
  } else {
    throw InvalidConfig("unknown boilerplate profile '" + p.name + "'");
  }
  p.options.epochs = 40;
  p.options.batch_nodes = 128;
  p.options.label_smoothing = 0.01;
  p.options.threshold = 0.5;
  return p;
}

GenreProfile genre_profile(std::string_view name) {
  GenreProfile p;
  p.name = std::string(name);
  if (name == "7web") {
    p.n_classes = 7, p.n_pages = 1400;
  } else if (name == "ki04") {
    p.n_classes = 8, p.n_pages = 1209;
  } else {
    throw InvalidConfig("unknown genre profile '" + p.name + "'");
  }
  p.dropout = 0.3;
  p.model = model::ModelConfig{};
  p.model.dropout = p.dropout;
  p.options.epochs = 35;
  p.options.lr = 0.002;
  p.options.restart_t0 = 5;
  p.options.scale = 5.0;
  p.options.margin = 0.3;
  p.options.readout = Readout::Cls;
  return p;
}

PretrainProfile pretrain_profile(std::string_view name) {
  if (name != "pretrain-default") throw InvalidConfig("unknown pre-training profile '" + std::string(name) + "'");
  PretrainProfile p;
  p.name = std::string(name);
  p.dropout = 0.0;
  p.options.epochs = 80;
  p.options.batch_pairs = 48;
  p.options.lr = 1e-3;
  p.options.dev_fraction = 0.1;
  return p;
}

std::vector<std::string> profile_names() { return {"cleaneval", "dragnet", "7web", "ki04", "pretrain-default"}; }

}  // namespace grownup::tasks
