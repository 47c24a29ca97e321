#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "psodr/core_data.hpp"
#include "psodr/preprocess.hpp"
#include "psodr/rng.hpp"

namespace psodr {

/// Generator settings for one synthetic subject.
///
/// Class-1 super-epochs carry sinusoids at `informative_bins` on
/// `informative_channels` with amplitude effect_size * noise_sigma; class 0 is
/// noise only. Subject "strength" is effect_size; transfer between subjects is
/// controlled by how much their informative sets overlap.
struct SynthConfig {
  std::string subject_id = "S1";
  std::size_t n_channels = 8;
  std::size_t n_super_epochs = 40;
  int sample_rate = 100;
  std::size_t sub_epoch_samples = 50;  // 0.5 s at sample_rate
  std::size_t sub_epochs_per_super = 7;
  std::size_t drop_edges = 1;
  std::vector<int> informative_channels = {0, 1};
  std::vector<int> informative_bins = {5};
  double effect_size = 3.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;

  std::size_t n_bins() const { return sub_epoch_samples / 2; }
};

inline std::vector<std::string> validate_synth_config(const SynthConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.n_channels < 2) problems.emplace_back("n_channels must be at least 2");
  if (cfg.n_super_epochs < 2) problems.emplace_back("n_super_epochs must be at least 2");
  if (cfg.sample_rate <= 0) problems.emplace_back("sample_rate must be positive");
  if (cfg.sub_epoch_samples < 2) problems.emplace_back("sub_epoch_samples must be at least 2");
  if (cfg.sub_epochs_per_super <= 2 * cfg.drop_edges) problems.emplace_back("no sub-epochs left after dropping edges");
  for (int c : cfg.informative_channels)
    if (c < 0 || static_cast<std::size_t>(c) >= cfg.n_channels) problems.emplace_back("informative channel out of range");
  for (int b : cfg.informative_bins)
    if (b < 0 || static_cast<std::size_t>(b) >= cfg.n_bins()) problems.emplace_back("informative bin out of range");
  if (!(cfg.effect_size >= 0.0)) problems.emplace_back("effect_size must be non-negative");
  if (!(cfg.noise_sigma >= 0.0)) problems.emplace_back("noise_sigma must be non-negative");
  return problems;
}

inline SubjectRecord synth_subject(const SynthConfig& cfg) {
  if (auto problems = validate_synth_config(cfg); !problems.empty())
    throw std::invalid_argument("invalid synth config: " + problems.front());

  Rng rng(cfg.seed);
  std::vector<int> labels(cfg.n_super_epochs);
  for (std::size_t e = 0; e < labels.size(); ++e) labels[e] = static_cast<int>(e % 2);
  rng.shuffle(std::span<int>(labels));

  const std::size_t len = cfg.sub_epoch_samples * cfg.sub_epochs_per_super;
  const double amplitude = cfg.effect_size * cfg.noise_sigma;
  const double two_pi = 2.0 * std::numbers::pi;
  Tensor3 raw(cfg.n_super_epochs, cfg.n_channels, len);
  for (std::size_t e = 0; e < cfg.n_super_epochs; ++e) {
    for (std::size_t c = 0; c < cfg.n_channels; ++c) {
      auto s = raw.series(e, c);
      const double offset = rng.uniform(-1.0, 1.0) * cfg.noise_sigma;
      for (double& v : s) v = offset + cfg.noise_sigma * rng.normal();
    }
    if (labels[e] != 1) continue;
    for (int c : cfg.informative_channels) {
      auto s = raw.series(e, static_cast<std::size_t>(c));
      for (int bin : cfg.informative_bins) {
        const double phase = rng.uniform(0.0, two_pi);
        const double step = two_pi * bin / static_cast<double>(cfg.sub_epoch_samples);
        for (std::size_t t = 0; t < len; ++t) s[t] += amplitude * std::cos(step * static_cast<double>(t) + phase);
      }
    }
  }
  // Stored recordings are float32.
  for (double& v : raw.values) v = static_cast<double>(static_cast<float>(v));

  SubjectRecord record;
  record.subject_id = cfg.subject_id;
  record.sample_rate = cfg.sample_rate;
  record.n_channels = cfg.n_channels;
  record.labels = labels;
  record.trials = slice_super_epochs(raw, labels, cfg.sub_epoch_samples, cfg.drop_edges);
  record.label_names = "0=noise-only,1=planted-signal";
  return record;
}

}  // namespace psodr
