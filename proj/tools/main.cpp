// whacsim command-line entry point. Parses flags, maps them onto config
// overrides, and drives everything through the shared library's C API.

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "whacsim.h"

namespace {

struct CommonArgs {
  std::string config;
  std::string out_dir;
  std::vector<std::string> sets;
  std::string seed;
  bool print_effective = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "Key-value config file");
  cmd->add_option("-o,--out", args.out_dir, "Output directory (default: out)");
  cmd->add_option("-s,--set", args.sets, "Override a config key, e.g. --set ppo.n_envs=4");
  cmd->add_option("--seed", args.seed, "Master seed (run.seed)");
  cmd->add_flag("--print-effective-config", args.print_effective,
                "Print the resolved config and exit");
}

int dispatch(const std::string& subcommand, const CommonArgs& args,
             std::vector<std::string> extra) {
  std::vector<std::string> overrides = args.sets;
  if (!args.out_dir.empty()) overrides.push_back("run.out_dir=" + args.out_dir);
  if (!args.seed.empty()) overrides.push_back("run.seed=" + args.seed);
  if (args.print_effective) overrides.push_back("run.print_effective_config=1");
  overrides.insert(overrides.end(), extra.begin(), extra.end());

  std::vector<const char*> raw;
  raw.reserve(overrides.size());
  for (const auto& s : overrides) raw.push_back(s.c_str());
  return wsim_run(subcommand.c_str(), args.config.empty() ? nullptr : args.config.c_str(),
                  raw.data(), raw.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"whacsim: lockstep co-simulation of a muscle-driven arm playing Whac-A-Mole"};
  app.require_subcommand(1);

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "Train a policy with PPO");
  add_common(train, train_args);
  std::string resume;
  train->add_option("--resume", resume, "Resume from a checkpoint");

  CommonArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint over the 6-configuration grid");
  add_common(eval, eval_args);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <out>/checkpoint.bin)");
  std::string rounds;
  eval->add_option("--rounds", rounds, "Rounds per configuration");

  CommonArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Replay a recorded session against a fresh app");
  add_common(replay, replay_args);
  std::string dump;
  replay->add_option("--dump", dump, "Recorded frame dump")->required();
  std::string max_rate;
  replay->add_option("--max-rate", max_rate, "Throttle to N steps/second (watchable playback)");

  CommonArgs env_args;
  auto* envelope = app.add_subcommand("envelope", "Reach envelope and target reachability");
  add_common(envelope, env_args);
  std::string resolution, targets;
  envelope->add_option("--resolution", resolution, "Grid resolution per DOF (default 100)");
  envelope->add_option("--targets", targets, "CSV of x,y,z targets (default: game grid)");

  CommonArgs scale_args;
  auto* scale = app.add_subcommand("reward-scale", "Forecast reward component scaling");
  add_common(scale, scale_args);
  std::string scenario;
  scale->add_option("--scenario", scenario,
                    "worst_case | best_case | linear_interp | quadratic_interp | all");

  CommonArgs report_args;
  auto* report = app.add_subcommand("report", "Build the report bundle from an eval log");
  add_common(report, report_args);
  std::string eval_log;
  report->add_option("--eval-log", eval_log, "Evaluation JSONL")->required();

  CommonArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Serve the application over the bridge protocol");
  add_common(serve, serve_args);
  std::string address, max_sessions;
  serve->add_option("--address", address, "tcp:host:port or unix:/path (default tcp:localhost:0)");
  serve->add_option("--max-sessions", max_sessions, "Exit after N sessions (0 = serve forever)");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    std::vector<std::string> extra;
    if (!resume.empty()) extra.push_back("train.resume=" + resume);
    return dispatch("train", train_args, extra);
  }
  if (eval->parsed()) {
    std::vector<std::string> extra;
    if (!checkpoint.empty()) extra.push_back("eval.checkpoint=" + checkpoint);
    if (!rounds.empty()) extra.push_back("eval.rounds=" + rounds);
    return dispatch("eval", eval_args, extra);
  }
  if (replay->parsed()) {
    std::vector<std::string> extra{"replay.dump=" + dump};
    if (!max_rate.empty()) extra.push_back("replay.max_rate=" + max_rate);
    return dispatch("replay", replay_args, extra);
  }
  if (envelope->parsed()) {
    std::vector<std::string> extra;
    if (!resolution.empty()) extra.push_back("envelope.resolution=" + resolution);
    if (!targets.empty()) extra.push_back("envelope.targets=" + targets);
    return dispatch("envelope", env_args, extra);
  }
  if (scale->parsed()) {
    std::vector<std::string> extra;
    if (!scenario.empty()) extra.push_back("scale.scenario=" + scenario);
    return dispatch("reward-scale", scale_args, extra);
  }
  if (report->parsed()) {
    return dispatch("report", report_args, {"report.eval_log=" + eval_log});
  }
  if (serve->parsed()) {
    std::vector<std::string> extra;
    if (!address.empty()) extra.push_back("bridge.address=" + address);
    if (!max_sessions.empty()) extra.push_back("bridge.max_sessions=" + max_sessions);
    return dispatch("serve", serve_args, extra);
  }
  return 2;
}
