#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psodr/classifiers.hpp"
#include "psodr/evaluation.hpp"
#include "psodr/mask_distill.hpp"
#include "psodr/parallel.hpp"
#include "psodr/preprocess.hpp"
#include "psodr/transfer.hpp"

namespace psodr {

/// One experimental condition. Experiment 1 mixes Super Subject trials into
/// the training set; Experiment 2 pretrains on the Super Subject and retrains
/// on the target. DR conditions reduce every set with a ComMask distilled from
/// the Super Subject named by dr_mask_source.
struct Condition {
  std::string id;
  bool uses_dr = false;
  GroupMode group_mode = GroupMode::kNone;
  bool retrain = false;
  GroupMode dr_mask_source = GroupMode::kNone;
};

inline const std::vector<Condition>& all_conditions() {
  using enum GroupMode;
  static const std::vector<Condition> table = {
      {"1.1a", false, kNone, false, kNone},         {"1.1b", false, kFourSub, false, kNone},
      {"1.1c", false, kBestSub, false, kNone},      {"1.2a", true, kNone, false, kFourSub},
      {"1.2b", true, kFourSub, false, kFourSub},    {"1.2c", true, kNone, false, kBestSub},
      {"1.2d", true, kBestSub, false, kBestSub},    {"2.1a", false, kFourSub, true, kNone},
      {"2.1b", false, kBestSub, true, kNone},       {"2.2a", true, kFourSub, true, kFourSub},
      {"2.2b", true, kBestSub, true, kBestSub},
  };
  return table;
}

inline const Condition& condition_by_id(const std::string& id) {
  for (const auto& c : all_conditions())
    if (c.id == id) return c;
  throw std::invalid_argument("unknown condition \"" + id + "\"");
}

/// 0.00, 0.05, ..., 0.90.
inline std::vector<double> standard_fractions() {
  std::vector<double> out;
  for (int i = 0; i <= 18; ++i) out.push_back(i * 0.05);
  return out;
}

inline bool is_standard_fraction(double f) {
  const double steps = f / 0.05;
  return f >= -1e-9 && f <= 0.9 + 1e-9 && std::abs(steps - std::round(steps)) < 1e-6;
}

/// Canonical grid value for a fraction (snaps 0.4000000001 to 0.40).
inline double snap_fraction(double f) { return std::round(f / 0.05) * 0.05; }

/// Preprocessed inputs for one target subject.
struct ExperimentContext {
  std::string target_id;
  FeatureTensor target;
  std::map<GroupMode, FeatureTensor> super_subjects;  // keyed by 4sub / Bsub
  std::map<GroupMode, Mask> masks;                    // ComMask per Super Subject
};

struct ExperimentConfig {
  CvSpec cv{3, 5, 0.0, 0.05, 0.05, 0};
  TrainConfig perceptron;
  double pretrain_val_fraction = 0.10;
  std::size_t jobs = 1;
};

namespace detail {

inline const FeatureTensor& super_for(const ExperimentContext& ctx, GroupMode mode) {
  auto it = ctx.super_subjects.find(mode);
  if (it == ctx.super_subjects.end()) throw std::invalid_argument("missing " + to_string(mode) + " Super Subject");
  return it->second;
}

inline const Mask* mask_for(const ExperimentContext& ctx, const Condition& cond) {
  if (!cond.uses_dr) return nullptr;
  auto it = ctx.masks.find(cond.dr_mask_source);
  if (it == ctx.masks.end()) throw std::invalid_argument("missing " + to_string(cond.dr_mask_source) + " ComMask");
  return &it->second;
}

inline Matrix design(const FeatureTensor& f, const Mask* mask, std::span<const std::size_t> rows) {
  return mask ? apply_mask(f, *mask, rows) : flatten_features(f, rows);
}

inline Matrix stack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

inline std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

struct PretrainedModel {
  PerceptronModel model;
  double seconds = 0.0;
};

/// Offline training on the whole Super Subject; early stopping uses a grouped
/// hold-out of the Super Subject's own trials.
inline PretrainedModel pretrain(const FeatureTensor& super_subject, const Mask* mask, const ExperimentConfig& cfg,
                                std::uint64_t seed) {
  CvSpec holdout{1, 1, 0.0, cfg.pretrain_val_fraction / 2.0, cfg.pretrain_val_fraction / 2.0, seed};
  const auto plan = make_splits(group_labels(super_subject.group_id, super_subject.label), holdout);
  std::vector<int> val_groups = plan.folds[0].val_groups;
  val_groups.insert(val_groups.end(), plan.folds[0].test_groups.begin(), plan.folds[0].test_groups.end());
  const auto val_rows = rows_in_groups(super_subject.group_id, val_groups);
  std::vector<std::size_t> train_rows;
  {
    std::vector<bool> is_val(super_subject.n_subepochs(), false);
    for (auto r : val_rows) is_val[r] = true;
    for (std::size_t r = 0; r < super_subject.n_subepochs(); ++r)
      if (!is_val[r]) train_rows.push_back(r);
  }
  TrainConfig tc = cfg.perceptron;
  tc.seed = derive_seed(seed, 0x97e);
  Stopwatch clock;
  auto model = perceptron_train(detail::design(super_subject, mask, train_rows), labels_of(super_subject, train_rows),
                                detail::design(super_subject, mask, val_rows), labels_of(super_subject, val_rows), tc);
  return {std::move(model), clock.seconds()};
}

/// Per-fold predictions of one fold, exposed for the zero-trial identity checks.
struct FoldOutcome {
  RunStats stats;
  std::vector<int> test_predictions;
};

/// Runs one condition at one training fraction over the configured CV and
/// returns one outcome per (rep, fold). Test splits only ever hold target trials.
inline std::vector<FoldOutcome> run_condition_detailed(const ExperimentContext& ctx, const Condition& cond,
                                                       double fraction, const ExperimentConfig& cfg,
                                                       const std::optional<PretrainedModel>& pretrained = std::nullopt) {
  const Mask* mask = detail::mask_for(ctx, cond);
  const FeatureTensor* super = cond.group_mode == GroupMode::kNone ? nullptr : &detail::super_for(ctx, cond.group_mode);
  if (cond.retrain && !super) throw std::invalid_argument("retraining conditions need a Super Subject");

  std::optional<PretrainedModel> base = pretrained;
  if (cond.retrain && !base) base = pretrain(*super, mask, cfg, derive_seed(cfg.cv.seed, 0xb5e));

  CvSpec cv = cfg.cv;
  cv.train_fraction = fraction;
  const auto plan = make_splits(group_labels(ctx.target.group_id, ctx.target.label), cv);

  Matrix super_x;
  std::vector<int> super_y;
  if (super && !cond.retrain) {
    const auto rows = all_rows(super->n_subepochs());
    super_x = detail::design(*super, mask, rows);
    super_y = labels_of(*super, rows);
  }

  std::vector<FoldOutcome> out(plan.folds.size());
  parallel_for(plan.folds.size(), cfg.jobs, [&](std::size_t i) {
    const auto& split = plan.folds[i];
    const auto train_rows = rows_in_groups(ctx.target.group_id, split.train_groups);
    const auto val_rows = rows_in_groups(ctx.target.group_id, split.val_groups);
    const auto test_rows = rows_in_groups(ctx.target.group_id, split.test_groups);
    const Matrix x_train = detail::design(ctx.target, mask, train_rows);
    const auto y_train = labels_of(ctx.target, train_rows);
    const Matrix x_val = detail::design(ctx.target, mask, val_rows);
    const auto y_val = labels_of(ctx.target, val_rows);

    TrainConfig tc = cfg.perceptron;
    tc.seed = derive_seed(cfg.cv.seed, 0xf01d, split.rep, split.fold);

    FoldOutcome& result = out[i];
    RunStats& s = result.stats;
    s.rep = split.rep;
    s.fold = split.fold;
    s.condition = cond.id;
    s.fraction = fraction;
    s.zero_trial = train_rows.empty();

    PerceptronModel model;
    if (cond.retrain) {
      s.train_seconds = base->seconds;
      Stopwatch clock;
      model = perceptron_retrain(base->model, x_train, y_train, x_val, y_val, tc);
      s.retrain_seconds = train_rows.empty() ? 0.0 : clock.seconds();
    } else {
      const Matrix x_all = detail::stack(x_train, super_x);
      const auto y_all = detail::concat(y_train, super_y);
      Stopwatch clock;
      // Nothing to learn from: an untrained (all-zero) perceptron.
      model = x_all.rows() == 0 ? PerceptronModel::zeros(x_val.cols())
                                : perceptron_train(x_all, y_all, x_val, y_val, tc);
      s.train_seconds = clock.seconds();
    }

    result.test_predictions = perceptron_predict(model, detail::design(ctx.target, mask, test_rows));
    const auto table = ContingencyTable::from_predictions(labels_of(ctx.target, test_rows), result.test_predictions);
    s.informedness = informedness(table);
    s.accuracy = accuracy(table);
  });
  return out;
}

inline std::vector<RunStats> run_condition(const ExperimentContext& ctx, const Condition& cond, double fraction,
                                           const ExperimentConfig& cfg) {
  std::vector<RunStats> out;
  for (auto& o : run_condition_detailed(ctx, cond, fraction, cfg)) out.push_back(std::move(o.stats));
  return out;
}

struct ReportRow {
  std::string subject;
  std::string condition;
  double fraction = 0.0;
  Summary informedness;
  Summary accuracy;
  double train_seconds = 0.0;
  double retrain_seconds = 0.0;
};

struct ExperimentReport {
  std::string subject;
  std::vector<ReportRow> rows;  // condition-major, ascending fraction
  std::map<std::string, double> threshold_fraction;  // per condition, when 0.90 was swept
  std::vector<RunStats> runs;
};

/// Full factorial over conditions x fractions for one target subject.
inline ExperimentReport run_sweep(const ExperimentContext& ctx, std::span<const Condition> conditions,
                                  std::span<const double> fractions, const ExperimentConfig& cfg) {
  for (double f : fractions)
    if (!is_standard_fraction(f)) throw std::invalid_argument("fraction " + std::to_string(f) + " is not on the 5% grid");

  ExperimentReport report;
  report.subject = ctx.target_id;
  for (const auto& cond : conditions) {
    std::optional<PretrainedModel> base;
    if (cond.retrain)
      base = pretrain(detail::super_for(ctx, cond.group_mode), detail::mask_for(ctx, cond), cfg,
                      derive_seed(cfg.cv.seed, 0xb5e));
    std::vector<RunStats> cond_runs;
    for (double raw : fractions) {
      const double fraction = snap_fraction(raw);
      std::vector<RunStats> stats;
      for (auto& o : run_condition_detailed(ctx, cond, fraction, cfg, base)) stats.push_back(std::move(o.stats));

      ReportRow row;
      row.subject = ctx.target_id;
      row.condition = cond.id;
      row.fraction = fraction;
      if (std::any_of(stats.begin(), stats.end(), [](const RunStats& s) { return s.informedness.has_value(); })) {
        row.informedness = aggregate_informedness(stats);
      } else {
        // Every test split held a single class.
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.informedness = Summary{nan, nan, 0, true};
      }
      std::vector<double> acc, tr, re;
      for (const auto& s : stats) {
        acc.push_back(s.accuracy);
        tr.push_back(s.train_seconds);
        re.push_back(s.retrain_seconds);
      }
      row.accuracy = aggregate(acc);
      row.train_seconds = aggregate(tr).mean;
      row.retrain_seconds = aggregate(re).mean;
      report.rows.push_back(row);
      cond_runs.insert(cond_runs.end(), stats.begin(), stats.end());
    }
    const auto by_fraction = informedness_by_fraction(cond_runs);
    const bool has_reference = std::any_of(by_fraction.begin(), by_fraction.end(), [](const auto& kv) {
      return std::abs(kv.first - kReferenceFraction) < 1e-9 && kv.second.size() >= 2;
    });
    if (has_reference) report.threshold_fraction[cond.id] = threshold_fraction(by_fraction);
    report.runs.insert(report.runs.end(), cond_runs.begin(), cond_runs.end());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string format_fraction(double f) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << f;
  return os.str();
}

}  // namespace detail

/// Deterministic per-cell results (no wall-clock values).
inline void write_report_csv(std::ostream& os, const ExperimentReport& report) {
  os << "subject,condition,fraction,informedness_mean,informedness_se,accuracy_mean,accuracy_se,n_folds\n";
  for (const auto& r : report.rows)
    os << r.subject << ',' << r.condition << ',' << detail::format_fraction(r.fraction) << ','
       << detail::format_double(r.informedness.mean) << ',' << detail::format_double(r.informedness.standard_error)
       << ',' << detail::format_double(r.accuracy.mean) << ',' << detail::format_double(r.accuracy.standard_error)
       << ',' << r.informedness.count << '\n';
}

inline void write_timings_csv(std::ostream& os, const ExperimentReport& report) {
  os << "subject,condition,fraction,train_s_mean,retrain_s_mean\n";
  for (const auto& r : report.rows)
    os << r.subject << ',' << r.condition << ',' << detail::format_fraction(r.fraction) << ','
       << detail::format_double(r.train_seconds) << ',' << detail::format_double(r.retrain_seconds) << '\n';
}

inline nlohmann::ordered_json report_summary_json(const ExperimentReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"condition", r.condition},
                    {"fraction", detail::format_fraction(r.fraction)},
                    {"informedness_mean", r.informedness.mean},
                    {"informedness_se", r.informedness.standard_error},
                    {"accuracy_mean", r.accuracy.mean},
                    {"accuracy_se", r.accuracy.standard_error},
                    {"n_folds", r.informedness.count}});
  nlohmann::ordered_json thresholds = nlohmann::ordered_json::object();
  for (const auto& [cond, f] : report.threshold_fraction) thresholds[cond] = detail::format_fraction(f);
  return {{"subject", report.subject}, {"rows", rows}, {"threshold_fraction", thresholds}};
}

/// One plot-data file per experiment family, each with the 1.1a baseline.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& plot_groups() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"experiment_1_1", {"1.1a", "1.1b", "1.1c"}},
      {"experiment_1_2", {"1.1a", "1.2a", "1.2b", "1.2c", "1.2d"}},
      {"experiment_2", {"1.1a", "2.1a", "2.1b", "2.2a", "2.2b"}},
  };
  return groups;
}

/// Writes report.csv, timings.csv, runs.csv, summary.json and plot_*.csv into `dir`.
/// Returns the written paths.
inline std::vector<std::filesystem::path> write_report_files(const ExperimentReport& report,
                                                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    written.push_back(dir / name);
    std::ofstream out(written.back(), std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + written.back().string());
    return out;
  };
  {
    auto out = open("report.csv");
    write_report_csv(out, report);
  }
  {
    auto out = open("timings.csv");
    write_timings_csv(out, report);
  }
  {
    auto out = open("runs.csv");
    write_run_stats_header(out);
    for (const auto& s : report.runs) write_run_stats_row(out, s);
  }
  {
    auto out = open("summary.json");
    out << report_summary_json(report).dump(2) << '\n';
  }
  for (const auto& [name, members] : plot_groups()) {
    std::vector<const ReportRow*> rows;
    for (const auto& r : report.rows)
      if (std::find(members.begin(), members.end(), r.condition) != members.end()) rows.push_back(&r);
    if (rows.empty()) continue;
    auto out = open("plot_" + name + ".csv");
    out << "condition,fraction,informedness_mean,informedness_se,accuracy_mean,accuracy_se\n";
    for (const auto* r : rows)
      out << r->condition << ',' << detail::format_fraction(r->fraction) << ','
          << detail::format_double(r->informedness.mean) << ',' << detail::format_double(r->informedness.standard_error)
          << ',' << detail::format_double(r->accuracy.mean) << ',' << detail::format_double(r->accuracy.standard_error)
          << '\n';
  }
  return written;
}

/// Scores a candidate Super Subject for a target: ComMask from a PSO-DR run
/// on the Super Subject, then a perceptron trained on the masked Super Subject
/// and tested on all of the target's trials.
struct BsubScorer {
  SwarmConfig swarm;
  CvSpec mask_cv{1, 2, 0.9, 0.05, 0.05, 0};
  CollectOptions collect;
  ExperimentConfig experiment;

  double operator()(const FeatureTensor& super_subject, const FeatureTensor& target) const {
    const auto masks = collect_masks(super_subject, swarm, mask_cv, collect);
    const auto mask = com_mask(masks, swarm.n, swarm.k);
    const auto model = pretrain(super_subject, &mask, experiment, derive_seed(experiment.cv.seed, 0xb5b));
    const auto rows = all_rows(target.n_subepochs());
    const auto predicted = perceptron_predict(model.model, apply_mask(target, mask, rows));
    return detail::validation_score(labels_of(target, rows), predicted);
  }
};

}  // namespace psodr
