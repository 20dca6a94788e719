#include "whacsim/ppo.hpp"

#include <algorithm>
#include <cmath>

namespace whacsim {

void PpoConfig::validate() const {
  if (n_envs < 1 || steps_per_env < 1) throw ConfigError("n_envs and steps_per_env must be >= 1");
  int64_t buffer = static_cast<int64_t>(n_envs) * steps_per_env;
  if (batch_size < 1 || batch_size > buffer) {
    throw ConfigError("batch_size must be in [1, n_envs*steps_per_env]");
  }
  if (!(lr_initial > 0.0) || lr_final > lr_initial) {
    throw ConfigError("learning rates must satisfy 0 < lr_final <= lr_initial");
  }
  if (lr_decay_start_fraction < 0.0 || lr_decay_start_fraction >= 1.0) {
    throw ConfigError("lr_decay_start_fraction must be in [0, 1)");
  }
  if (!(kl_limit > 0.0)) throw ConfigError("kl_limit must be positive");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
  if (!(clip_epsilon > 0.0)) throw ConfigError("clip_epsilon must be positive");
  if (gamma < 0.0 || gamma > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw ConfigError("gamma and gae_lambda must be in [0, 1]");
  }
  if (n_epochs < 1) throw ConfigError("n_epochs must be >= 1");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
}

PpoConfig PpoConfig::from_config(const KeyValueConfig& cfg) {
  PpoConfig p;
  p.n_envs = static_cast<int>(cfg.get_i64("n_envs", p.n_envs));
  p.steps_per_env = static_cast<int>(cfg.get_i64("steps_per_env", p.steps_per_env));
  p.batch_size = static_cast<int>(cfg.get_i64("batch_size", p.batch_size));
  p.total_steps = cfg.get_i64("total_steps", p.total_steps);
  p.lr_initial = cfg.get_f64("lr_initial", p.lr_initial);
  p.lr_final = cfg.get_f64("lr_final", p.lr_final);
  p.lr_decay_start_fraction = cfg.get_f64("lr_decay_start_fraction", p.lr_decay_start_fraction);
  p.clip_epsilon = cfg.get_f64("clip_epsilon", p.clip_epsilon);
  p.gamma = cfg.get_f64("gamma", p.gamma);
  p.gae_lambda = cfg.get_f64("gae_lambda", p.gae_lambda);
  p.kl_limit = cfg.get_f64("kl_limit", p.kl_limit);
  p.reward_scale = cfg.get_f64("reward_scale", p.reward_scale);
  p.entropy_coef = cfg.get_f64("entropy_coef", p.entropy_coef);
  p.value_coef = cfg.get_f64("value_coef", p.value_coef);
  p.max_grad_norm = cfg.get_f64("max_grad_norm", p.max_grad_norm);
  p.n_epochs = static_cast<int>(cfg.get_i64("n_epochs", p.n_epochs));
  p.hidden1 = static_cast<int>(cfg.get_i64("hidden1", p.hidden1));
  p.hidden2 = static_cast<int>(cfg.get_i64("hidden2", p.hidden2));
  p.init_log_std = cfg.get_f64("init_log_std", p.init_log_std);
  p.seed = cfg.get_u64("seed", p.seed);
  p.validate();
  return p;
}

void RolloutBuffer::allocate(int n_envs_, int steps_, int obs_dim_, int act_dim_) {
  n_envs = n_envs_;
  steps = steps_;
  obs_dim = obs_dim_;
  act_dim = act_dim_;
  size_t n = total();
  obs.assign(n * obs_dim, 0.0);
  actions.assign(n * act_dim, 0.0);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  bootstrap.assign(n_envs, 0.0);
  breakdown.assign(n, RewardBreakdown{});
}

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const uint8_t> dones, double bootstrap_value, double gamma,
                 double lambda, std::span<double> advantages, std::span<double> returns) {
  size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages.size() != n || returns.size() != n) {
    throw std::invalid_argument("gae inputs must have equal length");
  }
  double next_adv = 0.0;
  for (size_t i = n; i-- > 0;) {
    double nonterminal = dones[i] ? 0.0 : 1.0;
    double next_value = (i + 1 < n) ? values[i + 1] : bootstrap_value;
    double delta = rewards[i] + gamma * next_value * nonterminal - values[i];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    advantages[i] = next_adv;
    returns[i] = next_adv + values[i];
  }
}

void RolloutBuffer::compute_advantages(double gamma, double lambda) {
  for (int e = 0; e < n_envs; ++e) {
    size_t base = flat(e, 0);
    compute_gae(std::span(rewards).subspan(base, steps), std::span(values).subspan(base, steps),
                std::span(dones).subspan(base, steps), bootstrap[e], gamma, lambda,
                std::span(advantages).subspan(base, steps),
                std::span(returns).subspan(base, steps));
  }
}

double lr_schedule(int64_t step, int64_t total, const PpoConfig& cfg) {
  if (step < 0) step = 0;
  if (step > total) step = total;
  int64_t decay_start = static_cast<int64_t>(cfg.lr_decay_start_fraction * static_cast<double>(total));
  if (step <= decay_start || total <= decay_start) return cfg.lr_initial;
  double frac = static_cast<double>(step - decay_start) / static_cast<double>(total - decay_start);
  return cfg.lr_initial + frac * (cfg.lr_final - cfg.lr_initial);
}

UpdateStats ppo_update(PolicyParams& params, AdamState& adam, RolloutBuffer& buffer,
                       const PpoConfig& cfg, double lr, Rng& shuffle_rng) {
  size_t n = buffer.total();
  if (n == 0) throw std::invalid_argument("empty rollout buffer");

  // Advantage normalization over the whole update.
  double mean = 0.0;
  for (double a : buffer.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : buffer.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  double std = std::sqrt(var);
  std::vector<double> norm_adv(n);
  for (size_t i = 0; i < n; ++i) {
    norm_adv[i] = (n > 1 && std > 1e-12) ? (buffer.advantages[i] - mean) / std
                                         : buffer.advantages[i] - mean;
  }

  std::vector<uint32_t> indices(n);
  for (size_t i = 0; i < n; ++i) indices[i] = static_cast<uint32_t>(i);

  UpdateStats stats;
  stats.lr = lr;
  std::vector<double> grad(params.size());
  PolicyForward fwd;
  double policy_loss_sum = 0.0;
  double value_loss_sum = 0.0;
  double clip_count = 0.0;
  double sample_count = 0.0;

  for (int epoch = 0; epoch < cfg.n_epochs && !stats.kl_stop; ++epoch) {
    // Fisher-Yates with our own stream for reproducibility.
    for (size_t i = n - 1; i > 0; --i) {
      size_t j = shuffle_rng.uniform_int(i + 1);
      std::swap(indices[i], indices[j]);
    }
    size_t mb_size = static_cast<size_t>(cfg.batch_size);
    for (size_t start = 0; start + mb_size <= n; start += mb_size) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double inv_m = 1.0 / static_cast<double>(mb_size);
      double kl_sum = 0.0;
      double pg_sum = 0.0;
      double v_sum = 0.0;

      // First pass computes the minibatch KL so a too-far step is skipped
      // before any gradient is applied.
      struct SampleEval {
        double ratio;
        double logp;
        double value;
      };
      std::vector<SampleEval> evals(mb_size);
      for (size_t k = 0; k < mb_size; ++k) {
        size_t idx = indices[start + k];
        std::span<const double> ob(buffer.obs.data() + idx * buffer.obs_dim,
                                   static_cast<size_t>(buffer.obs_dim));
        std::span<const double> ac(buffer.actions.data() + idx * buffer.act_dim,
                                   static_cast<size_t>(buffer.act_dim));
        policy_forward(params, ob, fwd);
        double logp = policy_log_prob(params, fwd, ac);
        double log_ratio = logp - buffer.log_probs[idx];
        double ratio = std::exp(log_ratio);
        evals[k] = {ratio, logp, fwd.value};
        kl_sum += (ratio - 1.0) - log_ratio;
      }
      double approx_kl = kl_sum * inv_m;
      if (!std::isfinite(approx_kl)) {
        throw TrainingDiverged("approximate KL became non-finite");
      }
      if (approx_kl > cfg.kl_limit) {
        stats.kl_stop = true;
        break;
      }

      for (size_t k = 0; k < mb_size; ++k) {
        size_t idx = indices[start + k];
        std::span<const double> ob(buffer.obs.data() + idx * buffer.obs_dim,
                                   static_cast<size_t>(buffer.obs_dim));
        std::span<const double> ac(buffer.actions.data() + idx * buffer.act_dim,
                                   static_cast<size_t>(buffer.act_dim));
        policy_forward(params, ob, fwd);
        double ratio = evals[k].ratio;
        double adv = norm_adv[idx];
        double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        double pg1 = -ratio * adv;
        double pg2 = -clipped * adv;
        double pg = std::max(pg1, pg2);
        pg_sum += pg;
        bool ratio_clipped = std::abs(ratio - 1.0) > cfg.clip_epsilon;
        if (ratio_clipped) clip_count += 1.0;
        sample_count += 1.0;

        // When the clipped branch wins, the ratio is outside the clip range
        // and the surrogate is locally flat in the policy.
        double dl_dlogp = (pg1 >= pg2) ? -adv * ratio * inv_m : 0.0;
        double vdiff = evals[k].value - buffer.returns[idx];
        v_sum += 0.5 * vdiff * vdiff;
        double dl_dvalue = cfg.value_coef * vdiff * inv_m;
        double dl_dlogstd = -cfg.entropy_coef * inv_m;
        policy_backward(params, ob, fwd, ac, dl_dlogp, dl_dvalue, dl_dlogstd, grad);
      }

      double loss_probe = pg_sum * inv_m + cfg.value_coef * v_sum * inv_m;
      if (!std::isfinite(loss_probe)) {
        throw TrainingDiverged("loss became non-finite");
      }

      if (cfg.max_grad_norm > 0.0) {
        double norm_sq = 0.0;
        for (double g : grad) norm_sq += g * g;
        double norm = std::sqrt(norm_sq);
        if (norm > cfg.max_grad_norm) {
          double scale = cfg.max_grad_norm / norm;
          for (double& g : grad) g *= scale;
        }
      }
      adam_step(params, adam, grad, lr);

      stats.approx_kl = std::max(stats.approx_kl, approx_kl);
      stats.minibatches_applied += 1;
      policy_loss_sum += pg_sum * inv_m;
      value_loss_sum += v_sum * inv_m;
    }
    if (!stats.kl_stop) stats.epochs_used = epoch + 1;
  }

  if (stats.minibatches_applied > 0) {
    stats.policy_loss = policy_loss_sum / stats.minibatches_applied;
    stats.value_loss = value_loss_sum / stats.minibatches_applied;
  }
  stats.clip_fraction = sample_count > 0.0 ? clip_count / sample_count : 0.0;
  stats.entropy = policy_entropy(params);
  return stats;
}

}  // namespace whacsim
