#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "psodr/classifiers.hpp"
#include "psodr/core_data.hpp"
#include "psodr/evaluation.hpp"
#include "psodr/parallel.hpp"
#include "psodr/pso.hpp"

namespace psodr {

/// Reduced design matrix [rows x n*k]; column j is channel elv[j / k], bin fsm[j / k][j % k].
inline Matrix apply_mask(const FeatureTensor& features, const Mask& mask, std::span<const std::size_t> rows) {
  const std::size_t k = mask.k();
  if (auto problems = validate_mask(mask, features.n_channels(), features.n_bins()); !problems.empty())
    throw std::out_of_range("apply_mask: " + problems.front());
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mask.n() * k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < mask.n(); ++i) {
      const auto series = features.data.series(rows[r], static_cast<std::size_t>(mask.elv[i]));
      for (int bin : mask.fsm[i]) out(static_cast<Eigen::Index>(r), col++) = series[static_cast<std::size_t>(bin)];
    }
  }
  return out;
}

inline std::vector<std::size_t> all_rows(std::size_t count) {
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = i;
  return rows;
}

inline Matrix apply_mask(const FeatureTensor& features, const Mask& mask) {
  const auto rows = all_rows(features.n_subepochs());
  return apply_mask(features, mask, rows);
}

/// Full feature set [rows x N*K], channel-major.
inline Matrix flatten_features(const FeatureTensor& features, std::span<const std::size_t> rows) {
  const auto width = static_cast<Eigen::Index>(features.n_channels() * features.n_bins());
  Matrix out(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index j = 0; j < width; ++j)
      out(static_cast<Eigen::Index>(r), j) = features.data.values[rows[r] * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)];
  return out;
}

inline std::vector<int> labels_of(const FeatureTensor& features, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(features.label[r]);
  return out;
}

enum class FitnessMetric { kInformedness, kAccuracy };

/// ELM wrapper fitness: train on the masked training rows, score the masked validation rows.
struct ElmMaskFitness {
  const FeatureTensor* features = nullptr;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  std::size_t hidden = kDefaultElmHidden;
  std::uint64_t seed = 0;
  FitnessMetric metric = FitnessMetric::kInformedness;

  double score(const Mask& mask, std::span<const std::size_t> eval_rows) const {
    const Matrix xt = apply_mask(*features, mask, train_rows);
    const auto yt = labels_of(*features, train_rows);
    const auto model = elm_train(xt, yt, hidden, seed);
    const auto predicted = elm_predict(model, apply_mask(*features, mask, eval_rows));
    const auto truth = labels_of(*features, eval_rows);
    if (metric == FitnessMetric::kAccuracy) return accuracy(ContingencyTable::from_predictions(truth, predicted));
    return detail::validation_score(truth, predicted);
  }

  double operator()(const Mask& mask) const { return score(mask, val_rows); }
};

struct ScoredMask {
  Mask mask;
  double val_score = 0.0;
  double test_score = 0.0;
  std::size_t fold_id = 0;
  std::size_t rep_id = 0;
};

struct CollectOptions {
  std::size_t elm_hidden = kDefaultElmHidden;
  FitnessMetric metric = FitnessMetric::kInformedness;
  std::size_t jobs = 1;
};

/// Runs one PSO search per (rep, fold) of a grouped CV plan. The fitness is
/// measured train -> validation; the winning mask is then rescored on the
/// untouched test split.
inline std::vector<ScoredMask> collect_masks(const FeatureTensor& features, const SwarmConfig& swarm, const CvSpec& cv,
                                             const CollectOptions& options = {}) {
  SwarmConfig base = swarm;
  base.n_channels = features.n_channels();
  base.n_bins = features.n_bins();
  const auto groups = group_labels(features.group_id, features.label);
  const auto plan = make_splits(groups, cv);

  std::vector<ScoredMask> out(plan.folds.size());
  parallel_for(plan.folds.size(), options.jobs, [&](std::size_t idx) {
    const auto& split = plan.folds[idx];
    if (split.train_groups.empty()) throw std::invalid_argument("collect_masks: empty training split");
    ElmMaskFitness fitness;
    fitness.features = &features;
    fitness.train_rows = rows_in_groups(features.group_id, split.train_groups);
    fitness.val_rows = rows_in_groups(features.group_id, split.val_groups);
    fitness.hidden = options.elm_hidden;
    fitness.metric = options.metric;
    fitness.seed = derive_seed(swarm.seed, 0xe1a, split.rep, split.fold);

    SwarmConfig cfg = base;
    cfg.seed = derive_seed(swarm.seed, 0x5a4, split.rep, split.fold);
    const auto result = run_pso(cfg, fitness);
    const auto test_rows = rows_in_groups(features.group_id, split.test_groups);
    out[idx] = {result.mask, result.fitness, fitness.score(result.mask, test_rows), split.fold, split.rep};
  });
  return out;
}

/// Highest mean of validation and test score; ties go to the lowest (rep, fold).
inline Mask best_mask(std::span<const ScoredMask> masks) {
  if (masks.empty()) throw std::invalid_argument("best_mask: empty mask list");
  const ScoredMask* best = &masks.front();
  for (const auto& m : masks) {
    const double score = (m.val_score + m.test_score) / 2.0;
    const double best_score = (best->val_score + best->test_score) / 2.0;
    if (score > best_score ||
        (score == best_score && std::tie(m.rep_id, m.fold_id) < std::tie(best->rep_id, best->fold_id)))
      best = &m;
  }
  return best->mask;
}

namespace detail {

/// Indexes ordered by descending count, then ascending index; only indexes with a count are returned.
inline std::vector<int> rank_by_count(const std::map<int, std::size_t>& counts) {
  std::vector<std::pair<int, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<int> out;
  for (const auto& [index, count] : items) out.push_back(index);
  return out;
}

/// Appends the lowest indexes not yet present until `want` entries exist.
inline void fill_lowest_unused(std::vector<int>& chosen, std::size_t want) {
  for (int candidate = 0; chosen.size() < want; ++candidate)
    if (std::find(chosen.begin(), chosen.end(), candidate) == chosen.end()) chosen.push_back(candidate);
}

}  // namespace detail

/// Mask of the most frequently selected indexes.
///
/// ELV: the n most frequent channels. Each chosen channel's row: its k most
/// frequent bins among the FSM rows that belonged to that channel, topped up
/// from the global bin frequency when the channel has fewer than k distinct
/// bins. Ties go to the lower index.
inline Mask com_mask(std::span<const ScoredMask> masks, std::size_t n, std::size_t k) {
  if (masks.empty()) throw std::invalid_argument("com_mask: empty mask list");
  std::map<int, std::size_t> channel_counts;
  std::map<int, std::size_t> global_bins;
  std::map<int, std::map<int, std::size_t>> bins_by_channel;
  for (const auto& sm : masks) {
    for (std::size_t i = 0; i < sm.mask.elv.size(); ++i) {
      const int channel = sm.mask.elv[i];
      ++channel_counts[channel];
      for (int bin : sm.mask.fsm[i]) {
        ++bins_by_channel[channel][bin];
        ++global_bins[bin];
      }
    }
  }

  Mask out;
  auto channels = detail::rank_by_count(channel_counts);
  if (channels.size() > n) channels.resize(n);
  detail::fill_lowest_unused(channels, n);
  out.elv = channels;
  const auto global_rank = detail::rank_by_count(global_bins);
  for (int channel : out.elv) {
    std::vector<int> row;
    if (auto it = bins_by_channel.find(channel); it != bins_by_channel.end()) row = detail::rank_by_count(it->second);
    if (row.size() > k) row.resize(k);
    for (int bin : global_rank) {
      if (row.size() >= k) break;
      if (std::find(row.begin(), row.end(), bin) == row.end()) row.push_back(bin);
    }
    detail::fill_lowest_unused(row, k);
    out.fsm.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {n, k, elv, fsm}

template <typename Json>
void to_json(Json& j, const Mask& m) {
  j = Json{{"n", m.n()}, {"k", m.k()}, {"elv", m.elv}, {"fsm", m.fsm}};
}

inline void from_json(const nlohmann::json& j, Mask& m) {
  m.elv = j.at("elv").get<std::vector<int>>();
  m.fsm = j.at("fsm").get<std::vector<std::vector<int>>>();
  if (j.at("n").get<std::size_t>() != m.elv.size() || m.fsm.size() != m.elv.size())
    throw std::invalid_argument("mask json: n disagrees with elv/fsm");
  for (const auto& row : m.fsm)
    if (row.size() != j.at("k").get<std::size_t>()) throw std::invalid_argument("mask json: k disagrees with fsm");
}

template <typename Json>
void to_json(Json& j, const ScoredMask& m) {
  j = m.mask;
  j["val_score"] = m.val_score;
  j["test_score"] = m.test_score;
  j["rep_id"] = m.rep_id;
  j["fold_id"] = m.fold_id;
}

inline void from_json(const nlohmann::json& j, ScoredMask& m) {
  m.mask = j.get<Mask>();
  m.val_score = j.at("val_score").get<double>();
  m.test_score = j.at("test_score").get<double>();
  m.rep_id = j.at("rep_id").get<std::size_t>();
  m.fold_id = j.at("fold_id").get<std::size_t>();
}

}  // namespace psodr
