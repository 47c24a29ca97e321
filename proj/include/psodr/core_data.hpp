#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace psodr {

/// Dense row-major [d0 x d1 x d2] array of doubles.
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d0(a), d1(b), d2(c), values(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values[(i * d1 + j) * d2 + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return values[(i * d1 + j) * d2 + k]; }

  /// Contiguous [d2] series at (i, j).
  std::span<double> series(std::size_t i, std::size_t j) { return {values.data() + (i * d1 + j) * d2, d2}; }
  std::span<const double> series(std::size_t i, std::size_t j) const {
    return {values.data() + (i * d1 + j) * d2, d2};
  }

  bool operator==(const Tensor3&) const = default;
};

/// Epoched recordings: [n_subepochs x n_channels x n_samples].
///
/// group_id[i] is the super-epoch a sub-epoch was cut from; label[i] is that
/// super-epoch's class.
struct TrialTensor {
  Tensor3 data;
  std::vector<int> group_id;
  std::vector<int> label;

  std::size_t n_subepochs() const { return data.d0; }
  std::size_t n_channels() const { return data.d1; }
  std::size_t n_samples() const { return data.d2; }

  bool operator==(const TrialTensor&) const = default;
};

/// Spectral features: [n_subepochs x n_channels x K].
struct FeatureTensor {
  Tensor3 data;
  std::vector<int> group_id;
  std::vector<int> label;

  std::size_t n_subepochs() const { return data.d0; }
  std::size_t n_channels() const { return data.d1; }
  std::size_t n_bins() const { return data.d2; }
};

struct SubjectRecord {
  std::string subject_id;
  int sample_rate = 0;
  std::size_t n_channels = 0;
  TrialTensor trials;
  std::vector<int> labels;  // one per super-epoch
  std::string label_names;  // free-text metadata, not interpreted

  std::size_t n_super_epochs() const { return labels.size(); }

  bool operator==(const SubjectRecord&) const = default;
};

/// Electrode vector plus per-electrode feature-bin rows.
struct Mask {
  std::vector<int> elv;               // n channel indexes
  std::vector<std::vector<int>> fsm;  // n rows of k bin indexes

  std::size_t n() const { return elv.size(); }
  std::size_t k() const { return fsm.empty() ? 0 : fsm.front().size(); }

  bool operator==(const Mask&) const = default;
};

/// Returns the list of broken Mask invariants against a search space of N channels and K bins.
inline std::vector<std::string> validate_mask(const Mask& mask, std::size_t n_channels, std::size_t n_bins) {
  std::vector<std::string> problems;
  if (mask.fsm.size() != mask.elv.size()) problems.emplace_back("fsm row count differs from elv length");
  if (mask.elv.size() > n_channels) problems.emplace_back("n exceeds channel count");
  const std::size_t k = mask.k();
  if (k > n_bins) problems.emplace_back("k exceeds bin count");
  if (std::set<int>(mask.elv.begin(), mask.elv.end()).size() != mask.elv.size())
    problems.emplace_back("duplicate electrode in elv");
  for (int c : mask.elv)
    if (c < 0 || static_cast<std::size_t>(c) >= n_channels) problems.emplace_back("electrode index out of range");
  for (const auto& row : mask.fsm) {
    if (row.size() != k) problems.emplace_back("ragged fsm row");
    if (std::set<int>(row.begin(), row.end()).size() != row.size()) problems.emplace_back("duplicate bin in fsm row");
    for (int b : row)
      if (b < 0 || static_cast<std::size_t>(b) >= n_bins) problems.emplace_back("bin index out of range");
  }
  return problems;
}

struct ContingencyTable {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }

  /// Class 1 is the positive class.
  static ContingencyTable from_predictions(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("prediction count differs from label count");
    ContingencyTable t;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == 1) {
        (predicted[i] == 1 ? t.tp : t.fn)++;
      } else {
        (predicted[i] == 1 ? t.fp : t.tn)++;
      }
    }
    return t;
  }
};

/// Checks every SubjectRecord/TrialTensor invariant. Violations are data, not failures.
inline std::vector<std::string> validate_record(const SubjectRecord& record) {
  std::vector<std::string> problems;
  const auto& t = record.trials;
  if (record.sample_rate <= 0) problems.emplace_back("sample_rate must be positive");
  if (t.data.values.size() != t.data.d0 * t.data.d1 * t.data.d2) problems.emplace_back("payload size mismatch");
  if (t.n_channels() != record.n_channels) problems.emplace_back("channel count mismatch");
  if (t.group_id.size() != t.n_subepochs()) problems.emplace_back("group_id length mismatch");
  if (t.label.size() != t.n_subepochs()) problems.emplace_back("sub-epoch label length mismatch");

  int max_group = -1;
  bool negative = false;
  std::set<int> seen;
  for (int g : t.group_id) {
    negative |= g < 0;
    max_group = std::max(max_group, g);
    seen.insert(g);
  }
  if (negative || (max_group >= 0 && seen.size() != static_cast<std::size_t>(max_group) + 1))
    problems.emplace_back("group ids not contiguous");
  if (record.labels.size() != static_cast<std::size_t>(max_group + 1)) problems.emplace_back("label length mismatch");

  for (int l : record.labels)
    if (l != 0 && l != 1) {
      problems.emplace_back("labels must be 0 or 1");
      break;
    }
  if (t.label.size() == t.group_id.size()) {
    for (std::size_t i = 0; i < t.group_id.size(); ++i) {
      const int g = t.group_id[i];
      if (g >= 0 && static_cast<std::size_t>(g) < record.labels.size() && t.label[i] != record.labels[g]) {
        problems.emplace_back("sub-epoch label differs from super-epoch label");
        break;
      }
    }
  }
  return problems;
}

}  // namespace psodr
