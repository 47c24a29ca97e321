#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psodr/config.hpp"
#include "psodr/errors.hpp"
#include "psodr/experiments.hpp"
#include "psodr/mask_distill.hpp"
#include "psodr/preprocess.hpp"
#include "psodr/record_io.hpp"
#include "psodr/synth.hpp"
#include "psodr/transfer.hpp"

namespace psodr::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kDependency = 4 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = default_jobs();
  std::filesystem::path config;
  std::filesystem::path out;
};

/// Streams for machine-readable output (paths) and for progress logging.
struct Io {
  std::ostream& out;
  std::ostream& log;
};

/// Runs a command body and maps exceptions onto exit codes.
inline int guarded(const Io& io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.log << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DependencyError& e) {
    io.log << "missing dependency: " << e.what() << '\n';
    return kDependency;
  } catch (const DataError& e) {
    io.log << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    io.log << "error: " << e.what() << '\n';
    return kData;
  }
}

inline RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
  apply_seed(cfg, g.seed.value_or(cfg.seed));
  cfg.collect.jobs = g.jobs;
  cfg.experiment.jobs = g.jobs;
  return cfg;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Subject ids with a manifest in `data_dir`, sorted.
inline std::vector<std::string> discover_subjects(const std::filesystem::path& data_dir) {
  if (!std::filesystem::is_directory(data_dir)) throw DataError("data directory " + data_dir.string() + " not found");
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir))
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::map<std::string, SubjectRecord> load_roster(const std::filesystem::path& data_dir,
                                                        const std::vector<std::string>& ids) {
  std::map<std::string, SubjectRecord> roster;
  for (const auto& id : ids) {
    const auto path = data_dir / (id + ".json");
    if (!std::filesystem::exists(path)) throw DataError("unknown subject " + id + " (no " + path.string() + ")");
    auto record = load_record(path);
    if (auto problems = validate_record(record); !problems.empty())
      throw DataError("subject " + id + ": " + problems.front());
    roster.emplace(id, std::move(record));
  }
  return roster;
}

inline std::filesystem::path mask_file_path(const std::filesystem::path& dir, const std::string& target, GroupMode mode) {
  return dir / (target + "." + to_string(mode) + ".masks.json");
}

/// Features of the Super Subject built from `members`.
inline FeatureTensor super_subject_features(const std::map<std::string, SubjectRecord>& roster,
                                            const std::vector<std::string>& members) {
  std::vector<SubjectRecord> parts;
  for (const auto& id : members) parts.push_back(roster.at(id));
  if (parts.size() == 1) return extract_features(parts.front());
  return extract_features(build_super_subject(parts));
}

// ---------------------------------------------------------------------------

/// Writes one synthetic SubjectRecord per configured subject into g.out.
inline int cmd_synth(const GlobalOptions& g, const Io& io) {
  return guarded(io, [&] {
    if (g.config.empty()) throw ConfigError("synth needs --config");
    const auto cfg = resolve_config(g);
    if (cfg.subjects.empty()) throw ConfigError(g.config.string() + ": no synth.subjects configured");
    const auto out_dir = g.out.empty() ? std::filesystem::path("data") : g.out;
    for (auto sc : cfg.subjects) {
      sc.seed = derive_seed(cfg.seed, 0x5b, sc.seed);
      const auto path = save_record(synth_subject(sc), out_dir);
      io.out << path.string() << '\n';
    }
    return kOk;
  });
}

struct MasksArgs {
  std::filesystem::path data_dir = "data";
  std::string target;
  std::vector<std::string> subjects;  // roster; empty = every manifest in data_dir
  GroupMode group_mode = GroupMode::kNone;
};

/// Runs the two-stage mask search on the target (group_mode none) or on its
/// Super Subject and writes the scored masks plus BestMask and ComMask.
inline int cmd_masks(const GlobalOptions& g, const MasksArgs& args, const Io& io) {
  return guarded(io, [&] {
    const auto cfg = resolve_config(g);
    const auto ids = args.subjects.empty() ? discover_subjects(args.data_dir) : args.subjects;
    if (std::find(ids.begin(), ids.end(), args.target) == ids.end())
      throw DataError("unknown subject " + args.target);
    const auto roster = load_roster(args.data_dir, ids);

    if (args.group_mode == GroupMode::kBestSub && !cfg.bsub_table.contains(args.target))
      throw ConfigError("Bsub requested but the config has no bsub_table entry for " + args.target);
    std::vector<std::string> members = args.group_mode == GroupMode::kNone
                                           ? std::vector<std::string>{args.target}
                                           : select_group(args.target, ids, args.group_mode, cfg.bsub_table);
    const auto features = super_subject_features(roster, members);

    SwarmConfig swarm = cfg.swarm;
    swarm.n_channels = features.n_channels();
    swarm.n_bins = features.n_bins();
    if (auto problems = validate_swarm_config(swarm); !problems.empty())
      throw ConfigError("swarm: " + problems.front());

    io.log << "psodr masks: " << args.target << " " << to_string(args.group_mode) << " over " << members.size()
           << " subject(s), " << cfg.mask_cv.reps << "x" << cfg.mask_cv.folds << " CV\n";
    Stopwatch clock;
    const auto scored = collect_masks(features, swarm, cfg.mask_cv, cfg.collect);
    io.log << "psodr masks: " << scored.size() << " masks in " << clock.seconds() << " s\n";

    nlohmann::ordered_json doc = {
        {"format", "psodr-masks"},
        {"version", 1},
        {"target", args.target},
        {"group_mode", to_string(args.group_mode)},
        {"members", members},
        {"seed", cfg.seed},
        {"n_channels", features.n_channels()},
        {"n_bins", features.n_bins()},
        {"scored_masks", scored},
        {"best_mask", best_mask(scored)},
        {"com_mask", com_mask(scored, swarm.n, swarm.k)},
    };
    const auto out_dir = g.out.empty() ? std::filesystem::path("masks") : g.out;
    std::filesystem::create_directories(out_dir);
    const auto path = mask_file_path(out_dir, args.target, args.group_mode);
    std::ofstream(path, std::ios::trunc) << doc.dump(2) << '\n';
    io.out << path.string() << '\n';
    return kOk;
  });
}

struct ExperimentArgs {
  std::filesystem::path data_dir = "data";
  std::string target;
  std::vector<std::string> subjects;
  std::string conditions = "all";
  std::string fractions = "all";
  std::filesystem::path masks_dir = "masks";
};

inline std::vector<Condition> parse_conditions(const std::string& text) {
  if (text == "all") return all_conditions();
  std::vector<Condition> out;
  try {
    for (const auto& id : split_list(text)) out.push_back(condition_by_id(id));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (out.empty()) throw ConfigError("no conditions given");
  return out;
}

inline std::vector<double> parse_fractions(const std::string& text) {
  if (text == "all") return standard_fractions();
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    double f = 0.0;
    try {
      std::size_t used = 0;
      f = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad fraction \"" + item + "\"");
    }
    if (!is_standard_fraction(f)) throw ConfigError("fraction " + item + " is not one of 0, 0.05, ..., 0.90");
    out.push_back(snap_fraction(f));
  }
  if (out.empty()) throw ConfigError("no fractions given");
  return out;
}

inline Mask load_com_mask(const std::filesystem::path& path, const FeatureTensor& target) {
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    auto mask = doc.at("com_mask").get<Mask>();
    if (auto problems = validate_mask(mask, target.n_channels(), target.n_bins()); !problems.empty())
      throw DataError(path.string() + ": " + problems.front());
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad mask file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("bad mask file " + path.string() + ": " + e.what());
  }
}

/// Runs the experiment grid for one target and writes the report files to g.out.
inline int cmd_experiment(const GlobalOptions& g, const ExperimentArgs& args, const Io& io) {
  return guarded(io, [&] {
    const auto cfg = resolve_config(g);
    const auto conditions = parse_conditions(args.conditions);
    const auto fractions = parse_fractions(args.fractions);
    const auto ids = args.subjects.empty() ? discover_subjects(args.data_dir) : args.subjects;
    if (std::find(ids.begin(), ids.end(), args.target) == ids.end())
      throw DataError("unknown subject " + args.target);

    std::set<GroupMode> group_modes, mask_modes;
    for (const auto& c : conditions) {
      if (c.group_mode != GroupMode::kNone) group_modes.insert(c.group_mode);
      if (c.uses_dr) mask_modes.insert(c.dr_mask_source);
    }
    const bool needs_bsub = group_modes.contains(GroupMode::kBestSub) || mask_modes.contains(GroupMode::kBestSub);
    if (needs_bsub && !cfg.bsub_table.contains(args.target))
      throw ConfigError("Bsub conditions need a bsub_table entry for " + args.target + " in the config");
    for (GroupMode mode : mask_modes) {
      const auto path = mask_file_path(args.masks_dir, args.target, mode);
      if (!std::filesystem::exists(path))
        throw DependencyError(path.string() + " not found; run: psodr masks --data " + args.data_dir.string() +
                              " --target " + args.target + " --group-mode " + to_string(mode) + " --out " +
                              args.masks_dir.string() + (g.config.empty() ? "" : " --config " + g.config.string()));
    }

    const auto roster = load_roster(args.data_dir, ids);
    ExperimentContext ctx;
    ctx.target_id = args.target;
    ctx.target = extract_features(roster.at(args.target));
    for (GroupMode mode : group_modes)
      ctx.super_subjects[mode] = super_subject_features(roster, select_group(args.target, ids, mode, cfg.bsub_table));
    for (GroupMode mode : mask_modes)
      ctx.masks[mode] = load_com_mask(mask_file_path(args.masks_dir, args.target, mode), ctx.target);

    io.log << "psodr experiment: " << args.target << ", " << conditions.size() << " condition(s) x "
           << fractions.size() << " fraction(s), " << cfg.experiment.cv.reps << "x" << cfg.experiment.cv.folds
           << " CV\n";
    Stopwatch clock;
    const auto report = run_sweep(ctx, conditions, fractions, cfg.experiment);
    io.log << "psodr experiment: done in " << clock.seconds() << " s\n";
    const auto out_dir = g.out.empty() ? std::filesystem::path("results") / args.target : g.out;
    for (const auto& path : write_report_files(report, out_dir)) io.out << path.string() << '\n';
    return kOk;
  });
}

struct BsubArgs {
  std::filesystem::path data_dir = "data";
  std::vector<std::string> subjects;
};

/// Brute-forces the best Super Subject combination for every roster member
/// and prints a bsub_table JSON object.
inline int cmd_bsub(const GlobalOptions& g, const BsubArgs& args, const Io& io) {
  return guarded(io, [&] {
    const auto cfg = resolve_config(g);
    const auto ids = args.subjects.empty() ? discover_subjects(args.data_dir) : args.subjects;
    const auto roster = load_roster(args.data_dir, ids);
    std::map<std::string, FeatureTensor> features;
    for (const auto& id : ids) features.emplace(id, extract_features(roster.at(id)));

    BsubScorer scorer;
    scorer.swarm = cfg.swarm;
    scorer.swarm.n_channels = features.begin()->second.n_channels();
    scorer.swarm.n_bins = features.begin()->second.n_bins();
    scorer.mask_cv = cfg.mask_cv;
    scorer.collect = cfg.collect;
    scorer.experiment = cfg.experiment;

    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& target : ids) {
      auto best = compute_bsub(target, ids, [&](const std::vector<std::string>& members) {
        const double s = scorer(super_subject_features(roster, members), features.at(target));
        io.log << "psodr bsub: " << target << " <- ";
        for (const auto& m : members) io.log << m << ' ';
        io.log << "score " << s << '\n';
        return s;
      });
      table[target] = best;
    }
    const std::string text = nlohmann::ordered_json{{"bsub_table", table}}.dump(2);
    if (!g.out.empty()) {
      std::ofstream(g.out, std::ios::trunc) << text << '\n';
      io.out << g.out.string() << '\n';
    } else {
      io.out << text << '\n';
    }
    return kOk;
  });
}

/// Checks every manifest in the data directory; prints one line per violation.
inline int cmd_validate(const GlobalOptions&, const std::filesystem::path& data_dir, const Io& io) {
  return guarded(io, [&] {
    bool clean = true;
    for (const auto& id : discover_subjects(data_dir)) {
      const auto record = load_record(data_dir / (id + ".json"));
      const auto problems = validate_record(record);
      for (const auto& p : problems) io.out << id << ": " << p << '\n';
      if (problems.empty()) io.out << id << ": ok\n";
      clean &= problems.empty();
    }
    return clean ? kOk : kData;
  });
}

}  // namespace psodr::cli
