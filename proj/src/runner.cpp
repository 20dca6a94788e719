#include "whacsim/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "whacsim/envelope.hpp"
#include "whacsim/metrics.hpp"
#include "whacsim/report.hpp"
#include "whacsim/scaling.hpp"
#include "whacsim/server.hpp"
#include "whacsim/textio.hpp"

namespace whacsim {

namespace {

std::string out_dir(const KeyValueConfig& cfg) {
  return cfg.get_str("run.out_dir", "out");
}

void write_sidecar(const KeyValueConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(out_dir(cfg));
  // Wall-clock metadata lives only here so every other output is
  // reproducible byte for byte.
  auto now = std::chrono::system_clock::now().time_since_epoch();
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  std::ofstream meta(out_dir(cfg) + "/run_meta.json");
  meta << "{\"command\":\"" << json_escape(command) << "\",\"unix_time\":" << secs << "}\n";
}

uint8_t parse_channel_mask(const std::string& channels) {
  uint8_t mask = 0;
  for (char c : channels) {
    switch (c) {
      case 'r': mask |= wire::kChannelR; break;
      case 'g': mask |= wire::kChannelG; break;
      case 'b': mask |= wire::kChannelB; break;
      case 'd': mask |= wire::kChannelDepth; break;
      default: throw ConfigError("env.channels may only contain r, g, b, d");
    }
  }
  return mask;
}

}  // namespace

ArmModel arm_model_from(const KeyValueConfig& cfg) {
  std::string model_path = cfg.get_str("arm.model_path", "");
  if (!model_path.empty()) {
    return ArmModel::from_config(KeyValueConfig::parse_file(model_path));
  }
  return ArmModel::from_config(cfg.subsection("arm."));
}

BridgeEnvConfig env_config_from(const KeyValueConfig& cfg) {
  BridgeEnvConfig env;
  env.arm = arm_model_from(cfg);
  env.game = GameConfig::from_config(cfg.subsection("game."));
  env.game.hmd_anchor = env.arm.hmd_pose;
  env.randomize_placement = cfg.get_str("game.placement", "mid") == "random";
  env.dt = cfg.get_f64("env.dt", 0.05);
  env.image_width = static_cast<uint16_t>(cfg.get_i64("env.image_width", 120));
  env.image_height = static_cast<uint16_t>(cfg.get_i64("env.image_height", 80));
  env.channel_mask = parse_channel_mask(cfg.get_str("env.channels", "rgbd"));
  env.debug_obs = cfg.get_bool("env.debug_obs", true);
  env.master_seed = cfg.get_u64("run.seed", 1);
  if (!(env.dt > 0.0)) throw ConfigError("env.dt must be positive");
  return env;
}

TrainerConfig trainer_config_from(const KeyValueConfig& cfg) {
  TrainerConfig tc;
  tc.ppo = PpoConfig::from_config(cfg.subsection("ppo."));
  if (!cfg.has("ppo.seed")) tc.ppo.seed = cfg.get_u64("run.seed", 1);
  tc.env = env_config_from(cfg);
  tc.env.episode_log_path = "";  // per-episode JSONL is an eval/serve concern
  tc.n_threads = static_cast<int>(cfg.get_i64("env.threads", 2));
  return tc;
}

int cmd_train(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "train");
  std::string dir = out_dir(cfg);
  TrainerConfig tc = trainer_config_from(cfg);
  Trainer trainer(tc);

  std::string resume = cfg.get_str("train.resume", "");
  if (!resume.empty()) trainer.restore_checkpoint(resume);

  int checkpoint_interval = static_cast<int>(cfg.get_i64("train.checkpoint_interval", 0));
  std::string log_path = dir + "/training_log.jsonl";
  std::ofstream log(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw ConfigError("cannot write training log: " + log_path);

  while (trainer.global_step() < tc.ppo.total_steps) {
    TrainLogEntry entry = trainer.run_update();
    log << entry.to_json() << "\n";
    log.flush();
    std::cout << "update " << entry.update << " steps " << entry.steps << " ep_reward "
              << f64_repr(entry.mean_episode_reward) << " hits "
              << f64_repr(entry.mean_episode_hits) << " kl " << f64_repr(entry.approx_kl)
              << "\n";
    if (checkpoint_interval > 0 && entry.update % checkpoint_interval == 0) {
      trainer.save_checkpoint(dir + "/checkpoint.bin");
    }
  }
  trainer.save_checkpoint(dir + "/checkpoint.bin");
  std::cout << "training done: " << trainer.global_step() << " steps, checkpoint at " << dir
            << "/checkpoint.bin\n";
  return 0;
}

int cmd_eval(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "eval");
  std::string dir = out_dir(cfg);
  std::string checkpoint = cfg.get_str("eval.checkpoint", dir + "/checkpoint.bin");
  PolicyParams params = Trainer::load_checkpoint_params(checkpoint);
  BridgeEnvConfig env = env_config_from(cfg);
  if (cfg.get_bool("eval.trace", false)) {
    env.trace_path = dir + "/trace";
    env.episode_log_path = dir + "/episodes";
  }
  int rounds = static_cast<int>(cfg.get_i64("eval.rounds", 2));
  uint64_t seed = derive_seed(cfg.get_u64("run.seed", 1), 0x6576616C);

  std::vector<EvalRoundRecord> records = evaluate_policy(params, env, rounds, seed);
  std::string log_path = dir + "/eval_log.jsonl";
  std::ofstream log(log_path);
  if (!log) throw ConfigError("cannot write evaluation log: " + log_path);
  for (const auto& rec : records) log << eval_record_json(rec) << "\n";
  log.close();

  ReportResult report = write_report(records, dir + "/report");
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "evaluated " << records.size() << " rounds over 6 configurations; report in "
            << dir << "/report\n";
  return 0;
}

int cmd_replay(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "replay");
  std::string dump_path = cfg.require_str("replay.dump");
  FrameDumpReader dump(dump_path);
  if (dump.size() == 0) {
    std::cerr << "error: dump is empty: " << dump_path << "\n";
    return 2;
  }

  // A recording carries its own episode configs; explicitly configured
  // game settings must agree with them.
  for (size_t i = 0; i < dump.size(); ++i) {
    wire::Message msg = dump.decode(i);
    if (const auto* reset = std::get_if<wire::ResetMsg>(&msg)) {
      for (const auto& [key, value] : reset->episode_config) {
        std::string cfg_key = "game." + key;
        if (key == "seed" || key == "debug_obs") continue;
        if (cfg.has(cfg_key) && cfg.get_str(cfg_key, "") != value) {
          std::cerr << "error: recording uses " << key << "=" << value
                    << " but the config requests " << cfg.get_str(cfg_key, "") << "\n";
          return 2;
        }
      }
    }
  }

  GameConfig game = GameConfig::from_config(cfg.subsection("game."));
  ArmModel arm = arm_model_from(cfg);
  game.hmd_anchor = arm.hmd_pose;
  WhacApp app(game);
  ServerAutomaton automaton(app);
  double throttle = cfg.get_f64("replay.max_rate", 0.0);  // steps per second, 0 = unthrottled

  size_t frame_index = 0;
  for (size_t i = 0; i < dump.size(); ++i) {
    wire::Message msg = dump.decode(i);
    wire::MsgType type = wire::message_type(msg);
    bool client_frame = type == wire::MsgType::kHello || type == wire::MsgType::kReset ||
                        type == wire::MsgType::kStateUpdate || type == wire::MsgType::kClose;
    if (!client_frame) continue;
    ServerAutomaton::Outcome outcome;
    try {
      outcome = automaton.handle_frame(dump.frame_bytes(i));
    } catch (const ProtocolError& e) {
      std::cerr << "error: frame " << i << " rejected during replay: " << e.what() << "\n";
      return 2;
    }
    if (outcome.closed) break;
    if (outcome.reply.empty()) continue;
    // The next recorded frame must be the app's reply.
    size_t j = i + 1;
    if (j >= dump.size()) {
      std::cerr << "divergence: recording ends where a reply was expected (frame " << j << ")\n";
      return 1;
    }
    const std::vector<uint8_t>& recorded = dump.frame_bytes(j);
    if (recorded != outcome.reply) {
      size_t byte = 0;
      size_t upto = std::min(recorded.size(), outcome.reply.size());
      while (byte < upto && recorded[byte] == outcome.reply[byte]) ++byte;
      std::cerr << "divergence at frame " << j << " (reply " << frame_index << "), byte " << byte
                << ": recorded "
                << (byte < recorded.size() ? std::to_string(recorded[byte]) : "EOF")
                << " recomputed "
                << (byte < outcome.reply.size() ? std::to_string(outcome.reply[byte]) : "EOF")
                << "\n";
      return 1;
    }
    ++frame_index;
    if (throttle > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(1.0 / throttle));
    }
  }
  std::cout << "replay OK: " << frame_index << " replies match byte-for-byte\n";
  return 0;
}

int cmd_envelope(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "envelope");
  std::string dir = out_dir(cfg);
  ArmModel arm = arm_model_from(cfg);
  int resolution = static_cast<int>(cfg.get_i64("envelope.resolution", 100));
  double tolerance = cfg.get_f64("envelope.tolerance", 0.02);
  CoordinateMap to_app{};  // app frame == canonical frame by default

  EnvelopeCloud bare = reach_envelope(arm, resolution, to_app, false);
  EnvelopeCloud equipped = reach_envelope(arm, resolution, to_app, true);

  auto write_cloud = [&](const EnvelopeCloud& cloud, const std::string& name) {
    std::ofstream out(dir + "/" + name);
    out << "x,y,z\n";
    for (const Vec3& p : cloud.points) {
      out << f64_repr(p.x) << "," << f64_repr(p.y) << "," << f64_repr(p.z) << "\n";
    }
  };
  write_cloud(bare, "envelope_bare.csv");
  write_cloud(equipped, "envelope_controller.csv");

  std::vector<Vec3> targets;
  std::string targets_path = cfg.get_str("envelope.targets", "");
  if (targets_path.empty()) {
    GameConfig game = GameConfig::from_config(cfg.subsection("game."));
    targets = whac_target_positions(arm.hmd_pose, game.grid_spacing);
  } else {
    std::ifstream in(targets_path);
    if (!in) throw ConfigError("cannot open targets file: " + targets_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
      Vec3 p;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.z) != 3) {
        throw ConfigError("targets file line is not x,y,z: " + line);
      }
      targets.push_back(p);
    }
  }

  std::vector<Reach> with_bare = check_targets(bare, targets, tolerance);
  std::vector<Reach> with_controller = check_targets(equipped, targets, tolerance);
  std::ofstream rep(dir + "/targets_report.csv");
  rep << "x,y,z,bare_hand,with_controller\n";
  int unreachable = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    rep << f64_repr(targets[i].x) << "," << f64_repr(targets[i].y) << ","
        << f64_repr(targets[i].z) << "," << reach_name(with_bare[i]) << ","
        << reach_name(with_controller[i]) << "\n";
    if (with_controller[i] == Reach::kUnreachable) ++unreachable;
  }
  std::cout << "envelope: " << targets.size() << " targets, " << unreachable
            << " unreachable with controller; outputs in " << dir << "\n";
  return 0;
}

int cmd_reward_scale(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "reward-scale");
  std::string dir = out_dir(cfg);
  std::string scenario = cfg.get_str("scale.scenario", "all");
  std::vector<ScalingScenario> scenarios;
  if (scenario == "all") {
    scenarios = {ScalingScenario::kWorstCase, ScalingScenario::kBestCase,
                 ScalingScenario::kLinearInterp, ScalingScenario::kQuadraticInterp};
  } else {
    scenarios = {parse_scaling_scenario(scenario)};
  }
  ScalingConfig sc;
  sc.horizon_steps = static_cast<int>(cfg.get_i64("scale.horizon", sc.horizon_steps));
  sc.dt = cfg.get_f64("env.dt", sc.dt);
  sc.effort_level = cfg.get_f64("scale.effort_level", sc.effort_level);
  sc.target_lifespan = cfg.get_f64("game.target_lifespan", sc.target_lifespan);
  for (ScalingScenario s : scenarios) {
    sc.scenario = s;
    std::vector<ScalingRow> rows = reward_scale_report(sc);
    std::string path = dir + "/reward_scale_" + scaling_scenario_name(s) + ".csv";
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << scaling_csv(rows);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

int cmd_report(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "report");
  std::string dir = out_dir(cfg);
  std::string eval_log = cfg.require_str("report.eval_log");
  std::vector<EvalRoundRecord> records = read_eval_log(eval_log);
  ReportResult res = write_report(records, dir + "/report");
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "report: " << res.files_written.size() << " files in " << dir << "/report\n";
  return 0;
}

int cmd_serve(const KeyValueConfig& cfg) {
  write_sidecar(cfg, "serve");
  std::string dir = out_dir(cfg);
  std::string address = cfg.get_str("bridge.address", "tcp:localhost:0");
  int max_sessions = static_cast<int>(cfg.get_i64("bridge.max_sessions", 0));
  GameConfig game = GameConfig::from_config(cfg.subsection("game."));
  ArmModel arm = arm_model_from(cfg);
  game.hmd_anchor = arm.hmd_pose;

  Listener listener(address);
  std::cout << "serving on " << listener.address() << "\n" << std::flush;
  std::vector<std::thread> workers;
  int session = 0;
  while (max_sessions == 0 || session < max_sessions) {
    std::unique_ptr<ByteStream> stream;
    try {
      stream = listener.accept();
    } catch (const TransportError&) {
      break;
    }
    int id = session++;
    workers.emplace_back([stream = std::move(stream), game, dir, id]() mutable {
      WhacApp app(game, dir + "/episodes_session" + std::to_string(id) + ".jsonl");
      try {
        serve_session(*stream, app);
      } catch (const ProtocolError& e) {
        std::cerr << "session " << id << " ended: " << e.what() << "\n";
      }
    });
  }
  for (auto& w : workers) w.join();
  return 0;
}

int run_command(const std::string& subcommand, const std::string& config_path,
                const std::vector<std::string>& overrides) {
  try {
    KeyValueConfig cfg;
    if (!config_path.empty()) cfg = KeyValueConfig::parse_file(config_path);
    cfg.apply_overrides(overrides);
    if (const char* env_out = std::getenv("WHACSIM_OUT_DIR"); env_out && *env_out) {
      cfg.set("run.out_dir", env_out);
    }
    if (const char* env_addr = std::getenv("WHACSIM_BRIDGE_ADDR"); env_addr && *env_addr) {
      cfg.set("bridge.address", env_addr);
    }
    if (cfg.get_bool("run.print_effective_config", false)) {
      std::cout << cfg.to_string();
      return 0;
    }
    if (subcommand == "train") return cmd_train(cfg);
    if (subcommand == "eval") return cmd_eval(cfg);
    if (subcommand == "replay") return cmd_replay(cfg);
    if (subcommand == "envelope") return cmd_envelope(cfg);
    if (subcommand == "reward-scale") return cmd_reward_scale(cfg);
    if (subcommand == "report") return cmd_report(cfg);
    if (subcommand == "serve") return cmd_serve(cfg);
    std::cerr << "error: unknown subcommand: " << subcommand << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace whacsim
