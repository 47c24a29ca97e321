#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psodr/classifiers.hpp"
#include "psodr/errors.hpp"
#include "psodr/experiments.hpp"
#include "psodr/mask_distill.hpp"
#include "psodr/pso.hpp"
#include "psodr/synth.hpp"
#include "psodr/transfer.hpp"

namespace psodr {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a CLI run can be configured with. Absent sections keep the defaults below.
struct RunConfig {
  std::uint64_t seed = 0;
  std::vector<SynthConfig> subjects;
  SwarmConfig swarm;
  CvSpec mask_cv{10, 20, 0.90, 0.05, 0.05, 0};
  CollectOptions collect;
  ExperimentConfig experiment{CvSpec{10, 20, 0.0, 0.05, 0.05, 0}, TrainConfig{}, 0.10, 1};
  BsubTable bsub_table;
  bool has_bsub_table = false;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline void check_keys(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.contains(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void read_cv(const nlohmann::json& j, CvSpec& cv, const std::string& where) {
  check_keys(j, where, {"reps", "folds"});
  read_opt(j, "reps", cv.reps, where);
  read_opt(j, "folds", cv.folds, where);
}

}  // namespace detail

/// Parses config text. Syntax errors are reported with line and column.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  detail::check_keys(root, source, {"schema_version", "seed", "synth", "swarm", "mask_cv", "experiment_cv", "elm",
                                    "perceptron", "bsub_table"});
  int version = 0;
  detail::read_opt(root, "schema_version", version, source);
  if (version != kConfigSchemaVersion)
    throw ConfigError(source + ": schema_version must be " + std::to_string(kConfigSchemaVersion));

  RunConfig cfg;
  detail::read_opt(root, "seed", cfg.seed, source);

  if (root.contains("synth")) {
    const auto& s = root["synth"];
    const std::string where = source + ".synth";
    detail::check_keys(s, where, {"sample_rate", "n_channels", "n_super_epochs", "sub_epoch_samples",
                                  "sub_epochs_per_super", "drop_edges", "noise_sigma", "subjects"});
    SynthConfig base;
    detail::read_opt(s, "sample_rate", base.sample_rate, where);
    detail::read_opt(s, "n_channels", base.n_channels, where);
    detail::read_opt(s, "n_super_epochs", base.n_super_epochs, where);
    detail::read_opt(s, "sub_epoch_samples", base.sub_epoch_samples, where);
    detail::read_opt(s, "sub_epochs_per_super", base.sub_epochs_per_super, where);
    detail::read_opt(s, "drop_edges", base.drop_edges, where);
    detail::read_opt(s, "noise_sigma", base.noise_sigma, where);
    if (!s.contains("subjects") || !s["subjects"].is_array() || s["subjects"].empty())
      throw ConfigError(where + ".subjects: expected a non-empty array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s["subjects"].size(); ++i) {
      const auto& entry = s["subjects"][i];
      const std::string w = where + ".subjects[" + std::to_string(i) + "]";
      detail::check_keys(entry, w, {"id", "informative_channels", "informative_bins", "effect_size", "noise_sigma", "seed"});
      SynthConfig sc = base;
      sc.seed = 0;
      if (!entry.contains("id")) throw ConfigError(w + ": missing id");
      detail::read_opt(entry, "id", sc.subject_id, w);
      detail::read_opt(entry, "informative_channels", sc.informative_channels, w);
      detail::read_opt(entry, "informative_bins", sc.informative_bins, w);
      detail::read_opt(entry, "effect_size", sc.effect_size, w);
      detail::read_opt(entry, "noise_sigma", sc.noise_sigma, w);
      std::uint64_t seed = 0;
      const bool explicit_seed = entry.contains("seed");
      detail::read_opt(entry, "seed", seed, w);
      sc.seed = explicit_seed ? seed : i;  // combined with the master seed at synthesis time
      if (!ids.insert(sc.subject_id).second) throw ConfigError(w + ": duplicate id " + sc.subject_id);
      if (auto problems = validate_synth_config(sc); !problems.empty()) throw ConfigError(w + ": " + problems.front());
      cfg.subjects.push_back(sc);
    }
  }

  if (root.contains("swarm")) {
    const auto& s = root["swarm"];
    const std::string where = source + ".swarm";
    detail::check_keys(s, where, {"pop_size", "n", "k", "max_iter", "c1", "c2", "w1", "w2", "v_max_fraction",
                                  "target_fitness"});
    detail::read_opt(s, "pop_size", cfg.swarm.pop_size, where);
    detail::read_opt(s, "n", cfg.swarm.n, where);
    detail::read_opt(s, "k", cfg.swarm.k, where);
    detail::read_opt(s, "max_iter", cfg.swarm.max_iter, where);
    detail::read_opt(s, "c1", cfg.swarm.c1, where);
    detail::read_opt(s, "c2", cfg.swarm.c2, where);
    detail::read_opt(s, "w1", cfg.swarm.w1, where);
    detail::read_opt(s, "w2", cfg.swarm.w2, where);
    detail::read_opt(s, "v_max_fraction", cfg.swarm.v_max_fraction, where);
    detail::read_opt(s, "target_fitness", cfg.swarm.target_fitness, where);
    if (cfg.swarm.pop_size < 2 || cfg.swarm.n == 0 || cfg.swarm.k == 0 || cfg.swarm.max_iter == 0 ||
        cfg.swarm.c1 < 0 || cfg.swarm.c2 < 0 || !(cfg.swarm.v_max_fraction > 0))
      throw ConfigError(where + ": pop_size >= 2, n, k, max_iter > 0, c1, c2 >= 0 and v_max_fraction > 0 required");
  }
  if (root.contains("mask_cv")) detail::read_cv(root["mask_cv"], cfg.mask_cv, source + ".mask_cv");
  if (root.contains("experiment_cv")) detail::read_cv(root["experiment_cv"], cfg.experiment.cv, source + ".experiment_cv");
  if (cfg.mask_cv.reps == 0 || cfg.mask_cv.folds == 0 || cfg.experiment.cv.reps == 0 || cfg.experiment.cv.folds == 0)
    throw ConfigError(source + ": reps and folds must be positive");

  if (root.contains("elm")) {
    const auto& e = root["elm"];
    const std::string where = source + ".elm";
    detail::check_keys(e, where, {"hidden", "metric"});
    detail::read_opt(e, "hidden", cfg.collect.elm_hidden, where);
    std::string metric = "informedness";
    detail::read_opt(e, "metric", metric, where);
    if (metric == "informedness") cfg.collect.metric = FitnessMetric::kInformedness;
    else if (metric == "accuracy") cfg.collect.metric = FitnessMetric::kAccuracy;
    else throw ConfigError(where + ".metric: expected informedness or accuracy");
    if (cfg.collect.elm_hidden == 0) throw ConfigError(where + ".hidden must be positive");
  }
  if (root.contains("perceptron")) {
    const auto& p = root["perceptron"];
    const std::string where = source + ".perceptron";
    detail::check_keys(p, where, {"max_epochs", "learning_rate", "patience", "pretrain_val_fraction"});
    detail::read_opt(p, "max_epochs", cfg.experiment.perceptron.max_epochs, where);
    detail::read_opt(p, "learning_rate", cfg.experiment.perceptron.learning_rate, where);
    detail::read_opt(p, "patience", cfg.experiment.perceptron.patience, where);
    detail::read_opt(p, "pretrain_val_fraction", cfg.experiment.pretrain_val_fraction, where);
    if (!(cfg.experiment.perceptron.learning_rate > 0) || cfg.experiment.perceptron.patience == 0)
      throw ConfigError(where + ": learning_rate > 0 and patience >= 1 required");
  }
  if (root.contains("bsub_table")) {
    try {
      cfg.bsub_table = root["bsub_table"].get<BsubTable>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(source + ".bsub_table: " + e.what());
    }
    cfg.has_bsub_table = true;
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text, path.string());
}

/// Applies the master seed to every seeded component.
inline void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.swarm.seed = derive_seed(seed, 0x5a);
  cfg.mask_cv.seed = derive_seed(seed, 0xc1);
  cfg.experiment.cv.seed = derive_seed(seed, 0xc2);
}

}  // namespace psodr
