#pragma once

// Training driver: owns the parallel envs, the policy and optimizer, runs
// collect / GAE / update cycles, writes the JSON-lines training log and
// versioned binary checkpoints that resume bit-identically.

#include <memory>
#include <string>
#include <vector>

#include "whacsim/policy.hpp"
#include "whacsim/ppo.hpp"
#include "whacsim/rollout.hpp"

namespace whacsim {

struct TrainerConfig {
  PpoConfig ppo{};
  BridgeEnvConfig env{};
  int n_threads = 2;
};

struct TrainLogEntry {
  int update = 0;
  int64_t steps = 0;
  int episodes = 0;
  double mean_episode_reward = 0.0;
  double mean_episode_hits = 0.0;
  double approx_kl = 0.0;
  double lr = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double mean_step_reward = 0.0;
  double mean_score_term = 0.0;
  double mean_contact_term = 0.0;
  double mean_distance_term = 0.0;
  double mean_effort_term = 0.0;

  std::string to_json() const;
};

class Trainer {
 public:
  explicit Trainer(TrainerConfig cfg);

  TrainLogEntry run_update();

  int64_t global_step() const { return global_step_; }
  int update_index() const { return update_; }
  const PolicyParams& params() const { return params_; }
  const TrainerConfig& config() const { return cfg_; }
  BridgeEnv& env(int i) { return *envs_[i]; }

  void save_checkpoint(const std::string& path) const;
  void restore_checkpoint(const std::string& path);

  // Reads just the policy (and its layout) from a checkpoint.
  static PolicyParams load_checkpoint_params(const std::string& path);

 private:
  TrainerConfig cfg_;
  std::vector<std::unique_ptr<BridgeEnv>> envs_;
  std::vector<Rng> action_rngs_;
  Rng shuffle_rng_{0};
  PolicyParams params_;
  AdamState adam_;
  RolloutBuffer buffer_;
  int64_t global_step_ = 0;
  int update_ = 0;
};

}  // namespace whacsim
