#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psodr/core_data.hpp"
#include "psodr/mask_distill.hpp"

namespace psodr {

/// Concatenates subjects along the trial axis. Group ids are offset by the
/// cumulative super-epoch count so they stay unique.
inline SubjectRecord build_super_subject(std::span<const SubjectRecord> subjects) {
  if (subjects.size() < 2) throw std::invalid_argument("super subject needs at least 2 subjects");
  const auto& first = subjects.front();
  std::size_t total = 0;
  for (const auto& s : subjects) {
    if (s.n_channels != first.n_channels || s.trials.n_channels() != first.trials.n_channels())
      throw std::invalid_argument("super subject: channel count mismatch (" + s.subject_id + ")");
    if (s.sample_rate != first.sample_rate)
      throw std::invalid_argument("super subject: sample rate mismatch (" + s.subject_id + ")");
    if (s.trials.n_samples() != first.trials.n_samples())
      throw std::invalid_argument("super subject: sample count mismatch (" + s.subject_id + ")");
    total += s.trials.n_subepochs();
  }

  SubjectRecord out;
  out.sample_rate = first.sample_rate;
  out.n_channels = first.n_channels;
  out.label_names = first.label_names;
  out.trials.data = Tensor3(total, first.trials.n_channels(), first.trials.n_samples());
  auto dst = out.trials.data.values.begin();
  int offset = 0;
  for (const auto& s : subjects) {
    if (!out.subject_id.empty()) out.subject_id += "+";
    out.subject_id += s.subject_id;
    dst = std::copy(s.trials.data.values.begin(), s.trials.data.values.end(), dst);
    for (int g : s.trials.group_id) out.trials.group_id.push_back(g + offset);
    out.trials.label.insert(out.trials.label.end(), s.trials.label.begin(), s.trials.label.end());
    out.labels.insert(out.labels.end(), s.labels.begin(), s.labels.end());
    offset += static_cast<int>(s.labels.size());
  }
  return out;
}

/// Pools every subject's masks with equal weight and distills the ComMask of the pool.
inline Mask build_meta_mask(std::span<const std::pair<std::string, std::vector<ScoredMask>>> per_subject,
                            std::size_t n, std::size_t k) {
  std::vector<ScoredMask> pool;
  for (const auto& [id, masks] : per_subject) {
    if (masks.empty()) throw std::invalid_argument("meta mask: subject " + id + " contributed no masks");
    pool.insert(pool.end(), masks.begin(), masks.end());
  }
  if (pool.empty()) throw std::invalid_argument("meta mask: empty pool");
  return com_mask(pool, n, k);
}

enum class GroupMode { kNone, kFourSub, kBestSub };

inline std::string to_string(GroupMode mode) {
  switch (mode) {
    case GroupMode::kNone: return "none";
    case GroupMode::kFourSub: return "4sub";
    case GroupMode::kBestSub: return "Bsub";
  }
  return "none";
}

inline GroupMode parse_group_mode(const std::string& text) {
  if (text == "none") return GroupMode::kNone;
  if (text == "4sub") return GroupMode::kFourSub;
  if (text == "Bsub" || text == "bsub") return GroupMode::kBestSub;
  throw std::invalid_argument("unknown group mode \"" + text + "\" (expected none, 4sub or Bsub)");
}

/// target subject -> subjects forming its best Super Subject.
using BsubTable = std::map<std::string, std::vector<std::string>>;

/// Best combinations for BCI Competition III IVa (subjects AA, AL, AV, AW, AY).
inline BsubTable competition_iva_bsub_table() {
  return {{"AA", {"AL", "AW", "AY"}},
          {"AL", {"AV", "AW", "AY"}},
          {"AV", {"AA", "AL", "AW"}},
          {"AW", {"AA", "AY"}},
          {"AY", {"AL", "AV", "AW"}}};
}

/// Subjects forming the target's Super Subject: everyone else for 4sub, the
/// configured combination for Bsub, nobody for none.
inline std::vector<std::string> select_group(const std::string& target, std::span<const std::string> roster,
                                             GroupMode mode, const BsubTable& bsub_table) {
  if (std::find(roster.begin(), roster.end(), target) == roster.end())
    throw std::invalid_argument("subject " + target + " is not in the roster");
  switch (mode) {
    case GroupMode::kNone: return {};
    case GroupMode::kFourSub: {
      std::vector<std::string> out;
      for (const auto& id : roster)
        if (id != target) out.push_back(id);
      return out;
    }
    case GroupMode::kBestSub: {
      auto it = bsub_table.find(target);
      if (it == bsub_table.end()) throw std::invalid_argument("no Bsub combination configured for " + target);
      for (const auto& id : it->second)
        if (std::find(roster.begin(), roster.end(), id) == roster.end() || id == target)
          throw std::invalid_argument("Bsub combination for " + target + " names unusable subject " + id);
      return it->second;
    }
  }
  return {};
}

/// Exhaustive best-combination search: every subset of the other subjects
/// with at least two members is scored and the highest wins. Equal scores go to
/// the smaller subset, then the lexicographically smaller one.
inline std::vector<std::string> compute_bsub(
    const std::string& target, std::span<const std::string> roster,
    const std::function<double(const std::vector<std::string>&)>& score_subset) {
  std::vector<std::string> others;
  for (const auto& id : roster)
    if (id != target) others.push_back(id);
  if (others.size() < 2) throw std::invalid_argument("best combination needs at least two other subjects");
  std::sort(others.begin(), others.end());

  std::vector<std::string> best;
  double best_score = 0.0;
  const std::size_t subsets = std::size_t{1} << others.size();
  for (std::size_t bits = 1; bits < subsets; ++bits) {
    std::vector<std::string> subset;
    for (std::size_t i = 0; i < others.size(); ++i)
      if (bits & (std::size_t{1} << i)) subset.push_back(others[i]);
    if (subset.size() < 2) continue;
    const double score = score_subset(subset);
    const bool better = best.empty() || score > best_score ||
                        (score == best_score && (subset.size() < best.size() ||
                                                 (subset.size() == best.size() && subset < best)));
    if (better) {
      best = subset;
      best_score = score;
    }
  }
  return best;
}

}  // namespace psodr
