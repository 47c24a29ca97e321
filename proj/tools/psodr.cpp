// psodr: synthetic data, PSO-DR mask search, Super Subject transfer and
// training-fraction experiments from the command line.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "psodr/cli.hpp"

namespace {

void add_globals(CLI::App* cmd, psodr::cli::GlobalOptions& g, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Master seed (overrides the config file)");
  cmd->add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--config", g.config, "JSON config file");
  cmd->add_option("--out", g.out, "Output path");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = psodr::cli;
  CLI::App app{"PSO-based channel/feature reduction and subject-transfer experiments"};
  app.require_subcommand(1);

  cli::GlobalOptions g;
  std::uint64_t seed = 0;

  auto* synth = app.add_subcommand("synth", "Generate synthetic subjects from the config's synth section");
  add_globals(synth, g, seed);

  cli::MasksArgs masks;
  std::string masks_subjects, masks_mode = "none";
  auto* masks_cmd = app.add_subcommand("masks", "Run PSO-DR over a grouped CV and distill BestMask/ComMask");
  add_globals(masks_cmd, g, seed);
  masks_cmd->add_option("--data", masks.data_dir, "Directory of subject manifests");
  masks_cmd->add_option("--target", masks.target, "Target subject id")->required();
  masks_cmd->add_option("--subjects", masks_subjects, "Comma-separated roster (default: all in --data)");
  masks_cmd->add_option("--group-mode", masks_mode, "none | 4sub | Bsub");

  cli::ExperimentArgs exp;
  std::string exp_subjects;
  auto* exp_cmd = app.add_subcommand("experiment", "Sweep conditions x training fractions for one target");
  add_globals(exp_cmd, g, seed);
  exp_cmd->add_option("--data", exp.data_dir, "Directory of subject manifests");
  exp_cmd->add_option("--target", exp.target, "Target subject id")->required();
  exp_cmd->add_option("--subjects", exp_subjects, "Comma-separated roster (default: all in --data)");
  exp_cmd->add_option("--conditions", exp.conditions, "Condition ids (e.g. 1.1a,2.1b) or 'all'");
  exp_cmd->add_option("--fractions", exp.fractions, "Training fractions (e.g. 0,0.4,0.9) or 'all'");
  exp_cmd->add_option("--masks", exp.masks_dir, "Directory of cached mask files");

  cli::BsubArgs bsub;
  std::string bsub_subjects;
  auto* bsub_cmd = app.add_subcommand("bsub", "Search the best Super Subject combination for every subject");
  add_globals(bsub_cmd, g, seed);
  bsub_cmd->add_option("--data", bsub.data_dir, "Directory of subject manifests");
  bsub_cmd->add_option("--subjects", bsub_subjects, "Comma-separated roster (default: all in --data)");

  std::filesystem::path validate_dir = "data";
  auto* validate_cmd = app.add_subcommand("validate", "Check every subject record in a data directory");
  add_globals(validate_cmd, g, seed);
  validate_cmd->add_option("--data", validate_dir, "Directory of subject manifests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfig;
  }

  for (auto* cmd : {synth, masks_cmd, exp_cmd, bsub_cmd, validate_cmd})
    if (cmd->count("--seed") > 0) g.seed = seed;

  const cli::Io io{std::cout, std::cerr};
  if (*synth) return cli::cmd_synth(g, io);
  if (*masks_cmd) {
    masks.subjects = cli::split_list(masks_subjects);
    try {
      masks.group_mode = psodr::parse_group_mode(masks_mode);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return cli::kConfig;
    }
    return cli::cmd_masks(g, masks, io);
  }
  if (*exp_cmd) {
    exp.subjects = cli::split_list(exp_subjects);
    return cli::cmd_experiment(g, exp, io);
  }
  if (*bsub_cmd) {
    bsub.subjects = cli::split_list(bsub_subjects);
    return cli::cmd_bsub(g, bsub, io);
  }
  return cli::cmd_validate(g, validate_dir, io);
}
