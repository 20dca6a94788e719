#pragma once

// PPO with generalized advantage estimation: rollout storage, the clipped
// surrogate update with KL early stop, and the linear learning-rate
// schedule with delayed decay.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "whacsim/config.hpp"
#include "whacsim/game.hpp"
#include "whacsim/policy.hpp"
#include "whacsim/rng.hpp"

namespace whacsim {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PpoConfig {
  int n_envs = 10;
  int steps_per_env = 4000;
  int batch_size = 1000;  // minibatch size
  int64_t total_steps = 2'000'000;
  double lr_initial = 5e-5;
  double lr_final = 1e-7;
  double lr_decay_start_fraction = 0.2;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double kl_limit = 1.0;
  // Reward scaling applied to the learner's targets only (logs stay in
  // raw units); tames value-loss interference through the shared trunk.
  double reward_scale = 1.0;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int n_epochs = 10;
  int hidden1 = 64;
  int hidden2 = 64;
  double init_log_std = -0.7;
  uint64_t seed = 1;

  void validate() const;
  static PpoConfig from_config(const KeyValueConfig& cfg);
};

// Trajectories stored per env contiguously: index(env, t) = env*steps + t.
struct RolloutBuffer {
  int n_envs = 0;
  int steps = 0;
  int obs_dim = 0;
  int act_dim = 0;

  std::vector<double> obs;            // [n_envs*steps, obs_dim]
  std::vector<double> actions;        // [n_envs*steps, act_dim]
  std::vector<double> log_probs;      // [n_envs*steps]
  std::vector<double> rewards;        // [n_envs*steps]
  std::vector<double> values;         // [n_envs*steps]
  std::vector<uint8_t> dones;         // [n_envs*steps]
  std::vector<double> advantages;     // [n_envs*steps]
  std::vector<double> returns;        // [n_envs*steps]
  std::vector<double> bootstrap;      // [n_envs]
  std::vector<RewardBreakdown> breakdown;  // [n_envs*steps] diagnostics

  void allocate(int n_envs_, int steps_, int obs_dim_, int act_dim_);
  size_t flat(int env, int t) const { return static_cast<size_t>(env) * steps + t; }
  size_t total() const { return static_cast<size_t>(n_envs) * steps; }

  void compute_advantages(double gamma, double lambda);
};

// delta_t = r_t + gamma*v_{t+1}*(1-done_t) - v_t
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}; returns = A + v.
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const uint8_t> dones, double bootstrap_value, double gamma,
                 double lambda, std::span<double> advantages, std::span<double> returns);

// lr_initial until decay_start_fraction*total, then linear to lr_final.
double lr_schedule(int64_t step, int64_t total, const PpoConfig& cfg);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;  // max over applied minibatches
  double clip_fraction = 0.0;
  double entropy = 0.0;
  int epochs_used = 0;
  int minibatches_applied = 0;
  bool kl_stop = false;
  double lr = 0.0;
};

// Minibatch Adam on the clipped surrogate; advantages are normalized over
// the whole buffer first. A minibatch whose approximate KL exceeds
// kl_limit is skipped and the update stops.
UpdateStats ppo_update(PolicyParams& params, AdamState& adam, RolloutBuffer& buffer,
                       const PpoConfig& cfg, double lr, Rng& shuffle_rng);

}  // namespace whacsim
