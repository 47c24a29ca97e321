#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "psodr/core_data.hpp"
#include "psodr/rng.hpp"

namespace psodr {

// ---------------------------------------------------------------------------
// Scores

/// Bookmaker informedness, TPR + TNR - 1. Empty when a class is absent from the ground truth.
inline std::optional<double> informedness(const ContingencyTable& t) {
  if (t.tp + t.fn == 0 || t.tn + t.fp == 0) return std::nullopt;
  return static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fn) +
         static_cast<double>(t.tn) / static_cast<double>(t.tn + t.fp) - 1.0;
}

inline double accuracy(const ContingencyTable& t) {
  return t.total() == 0 ? 0.0 : static_cast<double>(t.tp + t.tn) / static_cast<double>(t.total());
}

// ---------------------------------------------------------------------------
// Grouped cross-validation

struct CvSpec {
  std::size_t reps = 10;
  std::size_t folds = 20;
  double train_fraction = 0.90;
  double val_fraction = 0.05;
  double test_fraction = 0.05;
  std::uint64_t seed = 0;
};

struct GroupLabel {
  int group = 0;
  int label = 0;
};

struct FoldSplit {
  std::size_t rep = 0, fold = 0;
  std::vector<int> train_groups, val_groups, test_groups;
};

struct SplitPlan {
  std::vector<FoldSplit> folds;  // rep-major, fold-minor
};

namespace detail {

inline std::size_t fraction_count(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

/// Interleaves two class lists so every prefix has close to the overall class ratio.
inline std::vector<int> interleave_by_class(const std::vector<int>& zeros, const std::vector<int>& ones) {
  std::vector<int> out;
  out.reserve(zeros.size() + ones.size());
  std::size_t i = 0, j = 0;
  while (i < zeros.size() || j < ones.size()) {
    // Pick the class furthest behind its target share; ties go to class 0.
    const double lag0 = zeros.empty() ? -1.0 : static_cast<double>(i + 1) / static_cast<double>(zeros.size());
    const double lag1 = ones.empty() ? -1.0 : static_cast<double>(j + 1) / static_cast<double>(ones.size());
    const bool take0 = j >= ones.size() || (i < zeros.size() && lag0 <= lag1);
    out.push_back(take0 ? zeros[i++] : ones[j++]);
  }
  return out;
}

}  // namespace detail

/// Builds a reps x folds plan over super-epoch groups.
///
/// Each rep shuffles the groups (class-interleaved) once; fold f tests on the
/// f-th block of round(test_fraction * G) groups and validates on the block
/// after it, wrapping around. Train groups are drawn class-stratified from the
/// remaining groups. For a fixed seed the val/test blocks do not depend on
/// train_fraction, and smaller train sets are prefixes of larger ones.
inline SplitPlan make_splits(std::span<const GroupLabel> groups, const CvSpec& spec) {
  if (spec.reps == 0 || spec.folds == 0) throw std::invalid_argument("reps and folds must be positive");
  if (spec.train_fraction < 0.0 || spec.train_fraction > 0.9 + 1e-12)
    throw std::invalid_argument("train_fraction must lie in [0, 0.9]");
  if (spec.val_fraction <= 0.0 || spec.test_fraction <= 0.0 ||
      spec.train_fraction + spec.val_fraction + spec.test_fraction > 1.0 + 1e-12)
    throw std::invalid_argument("fractions must be positive and sum to at most 1");
  {
    std::set<int> ids;
    for (const auto& g : groups) ids.insert(g.group);
    if (ids.size() != groups.size()) throw std::invalid_argument("duplicate group id");
  }

  const std::size_t total = groups.size();
  const std::size_t n_test = std::max<std::size_t>(1, detail::fraction_count(spec.test_fraction, total));
  const std::size_t n_val = std::max<std::size_t>(1, detail::fraction_count(spec.val_fraction, total));
  if (total < n_test + n_val) throw std::invalid_argument("too few groups for validation and test splits");
  const std::size_t n_train = std::min(detail::fraction_count(spec.train_fraction, total), total - n_test - n_val);

  SplitPlan plan;
  plan.folds.reserve(spec.reps * spec.folds);
  for (std::size_t rep = 0; rep < spec.reps; ++rep) {
    Rng rng(derive_seed(spec.seed, 0x5e7, rep));
    std::vector<int> zeros, ones;
    for (const auto& g : groups) (g.label == 1 ? ones : zeros).push_back(g.group);
    rng.shuffle(std::span<int>(zeros));
    rng.shuffle(std::span<int>(ones));
    const auto order = detail::interleave_by_class(zeros, ones);
    std::map<int, int> label_of;
    for (const auto& g : groups) label_of[g.group] = g.label;

    for (std::size_t fold = 0; fold < spec.folds; ++fold) {
      FoldSplit split{rep, fold, {}, {}, {}};
      const std::size_t start = (fold * n_test) % total;
      std::vector<bool> used(total, false);
      for (std::size_t i = 0; i < n_test; ++i) {
        const std::size_t pos = (start + i) % total;
        split.test_groups.push_back(order[pos]);
        used[pos] = true;
      }
      for (std::size_t i = 0; i < n_val; ++i) {
        const std::size_t pos = (start + n_test + i) % total;
        split.val_groups.push_back(order[pos]);
        used[pos] = true;
      }

      std::vector<int> rest0, rest1;
      for (std::size_t pos = 0; pos < total; ++pos)
        if (!used[pos]) (label_of[order[pos]] == 1 ? rest1 : rest0).push_back(order[pos]);
      Rng fold_rng(derive_seed(spec.seed, 0x7a1, rep, fold));
      fold_rng.shuffle(std::span<int>(rest0));
      fold_rng.shuffle(std::span<int>(rest1));
      // Stratified prefix of the shuffled remainder.
      const auto pool = detail::interleave_by_class(rest0, rest1);
      split.train_groups.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
      plan.folds.push_back(std::move(split));
    }
  }
  return plan;
}

/// Row indexes of the sub-epochs whose group is in `chosen`, in ascending row order.
inline std::vector<std::size_t> rows_in_groups(std::span<const int> group_of_row, std::span<const int> chosen) {
  const std::set<int> wanted(chosen.begin(), chosen.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < group_of_row.size(); ++i)
    if (wanted.contains(group_of_row[i])) rows.push_back(i);
  return rows;
}

/// One (group, label) entry per distinct group, ordered by group id.
inline std::vector<GroupLabel> group_labels(std::span<const int> group_of_row, std::span<const int> label_of_row) {
  std::map<int, int> seen;
  for (std::size_t i = 0; i < group_of_row.size(); ++i) seen.emplace(group_of_row[i], label_of_row[i]);
  std::vector<GroupLabel> out;
  for (auto [g, l] : seen) out.push_back({g, l});
  return out;
}

// ---------------------------------------------------------------------------
// Run statistics and aggregation

struct RunStats {
  std::size_t rep = 0, fold = 0;
  std::string condition;
  double fraction = 0.0;
  std::optional<double> informedness;
  double accuracy = 0.0;
  double train_seconds = 0.0;
  double retrain_seconds = 0.0;
  bool zero_trial = false;
};

inline void write_run_stats_header(std::ostream& os) {
  os << "rep,fold,condition,fraction,informedness,accuracy,train_s,retrain_s\n";
}

inline void write_run_stats_row(std::ostream& os, const RunStats& s) {
  std::ostringstream line;
  line << std::setprecision(17);
  line << s.rep << ',' << s.fold << ',' << s.condition << ',' << std::fixed << std::setprecision(2) << s.fraction
       << std::defaultfloat << std::setprecision(17) << ',';
  if (s.informedness) line << *s.informedness;
  else line << "nan";
  line << ',' << s.accuracy << ',' << s.train_seconds << ',' << s.retrain_seconds << '\n';
  os << line.str();
}

struct Summary {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
  bool degenerate_se = false;  // fewer than two values
};

/// Mean and standard error (sample sd / sqrt(m)) of the defined values.
inline Summary aggregate(std::span<const std::optional<double>> values) {
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  if (defined.empty()) throw std::invalid_argument("aggregate: no defined values");
  Summary s;
  s.count = defined.size();
  double sum = 0.0;
  for (double v : defined) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) {
    s.degenerate_se = true;
    return s;
  }
  double ss = 0.0;
  for (double v : defined) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  s.standard_error = sd / std::sqrt(static_cast<double>(s.count));
  return s;
}

inline Summary aggregate(std::span<const double> values) {
  std::vector<std::optional<double>> wrapped(values.begin(), values.end());
  return aggregate(std::span<const std::optional<double>>(wrapped));
}

inline Summary aggregate_informedness(std::span<const RunStats> stats) {
  std::vector<std::optional<double>> v;
  for (const auto& s : stats) v.push_back(s.informedness);
  return aggregate(std::span<const std::optional<double>>(v));
}

/// Two-sided Welch t-test p-value for a difference in means.
inline double welch_p_value(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch test needs at least two values per sample");
  auto moments = [](std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) return ma == mb ? 1.0 : 0.0;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline constexpr double kReferenceFraction = 0.90;

/// Smallest swept fraction whose informedness is not significantly different
/// (Welch, two-sided, p > alpha) from the 0.90 reference.
inline double threshold_fraction(const std::map<double, std::vector<double>>& sweep, double alpha = 0.05) {
  auto ref = std::find_if(sweep.begin(), sweep.end(),
                          [](const auto& kv) { return std::abs(kv.first - kReferenceFraction) < 1e-9; });
  if (ref == sweep.end()) throw std::invalid_argument("sweep lacks the 0.90 reference point");
  for (const auto& [fraction, values] : sweep) {
    if (&values == &ref->second) return fraction;
    if (values.size() < 2) continue;
    if (welch_p_value(values, ref->second) > alpha) return fraction;
  }
  return ref->first;
}

inline std::map<double, std::vector<double>> informedness_by_fraction(std::span<const RunStats> stats) {
  std::map<double, std::vector<double>> out;
  for (const auto& s : stats)
    if (s.informedness) out[s.fraction].push_back(*s.informedness);
  return out;
}

// ---------------------------------------------------------------------------

/// Monotonic wall-clock stopwatch.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace psodr
