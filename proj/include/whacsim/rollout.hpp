#pragma once

// One RL environment = one simulated arm driving one game over a bridge
// session. In-process envs use the synchronous loopback (and allow state
// snapshots for checkpoints); external envs connect to a served app over a
// socket. Rollout collection runs envs on worker threads with disjoint
// buffer slices, so results are independent of scheduling.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "whacsim/app.hpp"
#include "whacsim/arm.hpp"
#include "whacsim/ppo.hpp"
#include "whacsim/session.hpp"

namespace whacsim {

struct BridgeEnvConfig {
  ArmModel arm{};
  GameConfig game{};
  double dt = 0.05;
  uint16_t image_width = 120;
  uint16_t image_height = 80;
  uint8_t channel_mask = wire::kChannelAll;
  // Vector ("debug") observations append active-target positions to the
  // proprioceptive block instead of the pooled image channels.
  bool debug_obs = true;
  bool randomize_placement = false;  // sample the placement per episode
  uint64_t master_seed = 1;
  std::string episode_log_path;  // in-process app JSONL (optional)
  std::string trace_path;        // record the full session (optional)
};

struct EpisodeStats {
  double reward = 0.0;
  int steps = 0;
  int hits = 0;
  int misses = 0;
  int slow_contacts = 0;
  int score = 0;
};

class BridgeEnv {
 public:
  // In-process application behind the synchronous loopback.
  BridgeEnv(const BridgeEnvConfig& cfg, int env_id);
  // External application (already listening at the stream's far end).
  BridgeEnv(const BridgeEnvConfig& cfg, int env_id, std::unique_ptr<ByteStream> stream);

  size_t obs_dim() const { return obs_dim_; }
  static constexpr int act_dim() { return kArmActuators; }

  const std::vector<double>& reset();

  struct StepOutcome {
    double reward = 0.0;
    bool done = false;
    RewardBreakdown breakdown{};
    EpisodeStats completed{};  // valid when done; env auto-resets afterwards
    // Final-step log entries, captured before the auto-reset (done only).
    std::vector<std::pair<std::string, double>> final_log_entries;
  };
  StepOutcome step(const std::array<double, kArmActuators>& controls);

  const std::vector<double>& observation() const { return obs_; }
  const wire::ObservationMsg& last_observation_msg() const { return last_obs_; }
  Arm& arm() { return arm_; }
  WhacApp* inproc_app() { return app_.get(); }
  int episode_index() const { return episode_; }
  int env_id() const { return env_id_; }
  double last_log_entry(const std::string& key, double def = 0.0) const;

  void close() { session_->close(); }

  // Checkpoint support; in-process envs only.
  std::vector<uint8_t> save_snapshot() const;
  void restore_snapshot(std::span<const uint8_t> bytes);

 private:
  void init_session();
  void assemble_observation();
  std::vector<std::pair<std::string, std::string>> episode_config();

  BridgeEnvConfig cfg_;
  int env_id_ = 0;
  std::unique_ptr<FrameDumpWriter> trace_;
  std::unique_ptr<WhacApp> app_;
  SyncAppStream* sync_stream_ = nullptr;  // owned by session's stream when in-process
  std::unique_ptr<Session> session_;
  Arm arm_;
  Rng placement_rng_{0};
  size_t obs_dim_ = 0;
  int episode_ = 0;  // episodes started
  int step_in_episode_ = 0;
  std::vector<double> obs_;
  wire::ObservationMsg last_obs_{};
  EpisodeStats ep_stats_{};
};

struct CollectStats {
  int episodes = 0;
  double mean_episode_reward = 0.0;
  double mean_episode_hits = 0.0;
  double mean_step_reward = 0.0;
  double mean_score_term = 0.0;
  double mean_contact_term = 0.0;
  double mean_distance_term = 0.0;
  double mean_effort_term = 0.0;
};

// Fills the buffer with steps_per_env transitions per env; episodes
// auto-reset. Deterministic given seeds regardless of thread count.
CollectStats collect_rollouts(const PolicyParams& params,
                              std::vector<std::unique_ptr<BridgeEnv>>& envs,
                              std::vector<Rng>& action_rngs, RolloutBuffer& buffer,
                              int n_threads, double reward_scale = 1.0);

struct EvalRoundRecord {
  std::string difficulty;
  std::string placement;
  int round = 0;
  int hits = 0;
  int misses = 0;
  int slow_contacts = 0;
  int score = 0;
  double hit_rate = 0.0;
  double max_fatigued = 0.0;  // max over the round of mean fatigued fraction
  double episode_reward = 0.0;
  std::array<int, 9> cell_spawns{};
  std::array<int, 9> cell_hits{};
  std::array<int, 9> cell_misses{};
  std::vector<double> hitting_speeds;  // |v| at hit events, m/s
  std::vector<double> hammer_depths;   // per step, signed along the hit axis
};

std::string eval_record_json(const EvalRoundRecord& rec);

// Runs the six-configuration evaluation grid (three difficulties at mid
// placement, then three placements at medium difficulty) with deterministic
// mean actions, n_rounds full rounds each.
std::vector<EvalRoundRecord> evaluate_policy(const PolicyParams& params,
                                             const BridgeEnvConfig& base, int n_rounds,
                                             uint64_t eval_seed);

// Single-configuration evaluation used by tests and the exploratory checks.
std::vector<EvalRoundRecord> evaluate_config(const PolicyParams& params,
                                             const BridgeEnvConfig& cfg, int n_rounds,
                                             uint64_t eval_seed, int env_id);

}  // namespace whacsim
