#include "whacsim/trainer.hpp"

#include <cstdio>

#include "whacsim/canon.hpp"
#include "whacsim/textio.hpp"

namespace whacsim {

namespace {

constexpr uint32_t kCheckpointMagic = 0x5753434B;  // "WSCK"
constexpr uint32_t kCheckpointVersion = 1;

void write_rng(CanonWriter& w, const Rng& rng) {
  Rng::State s = rng.save();
  w.u64(s.counter);
  w.f64(s.cached_normal);
  w.u8(s.has_cached_normal ? 1 : 0);
}

void read_rng(CanonReader& r, Rng& rng) {
  Rng::State s;
  s.counter = r.u64();
  s.cached_normal = r.f64();
  s.has_cached_normal = r.u8() != 0;
  rng.restore(s);
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw CanonError("cannot open checkpoint: " + path);
  std::vector<uint8_t> bytes;
  uint8_t chunk[65536];
  size_t n;
  while ((n = std::fread(chunk, 1, sizeof(chunk), f)) > 0) bytes.insert(bytes.end(), chunk, chunk + n);
  std::fclose(f);
  return bytes;
}

}  // namespace

std::string TrainLogEntry::to_json() const {
  std::string out = "{";
  out += "\"update\":" + std::to_string(update);
  out += ",\"steps\":" + std::to_string(steps);
  out += ",\"episodes\":" + std::to_string(episodes);
  out += ",\"mean_episode_reward\":" + f64_repr(mean_episode_reward);
  out += ",\"mean_episode_hits\":" + f64_repr(mean_episode_hits);
  out += ",\"approx_kl\":" + f64_repr(approx_kl);
  out += ",\"lr\":" + f64_repr(lr);
  out += ",\"policy_loss\":" + f64_repr(policy_loss);
  out += ",\"value_loss\":" + f64_repr(value_loss);
  out += ",\"clip_fraction\":" + f64_repr(clip_fraction);
  out += ",\"entropy\":" + f64_repr(entropy);
  out += ",\"mean_step_reward\":" + f64_repr(mean_step_reward);
  out += ",\"reward_score_mean\":" + f64_repr(mean_score_term);
  out += ",\"reward_contact_mean\":" + f64_repr(mean_contact_term);
  out += ",\"reward_distance_mean\":" + f64_repr(mean_distance_term);
  out += ",\"reward_effort_mean\":" + f64_repr(mean_effort_term);
  out += "}";
  return out;
}

Trainer::Trainer(TrainerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.ppo.validate();
  envs_.reserve(cfg_.ppo.n_envs);
  BridgeEnvConfig env_cfg = cfg_.env;
  env_cfg.master_seed = derive_seed(cfg_.ppo.seed, 0x656E76);
  for (int e = 0; e < cfg_.ppo.n_envs; ++e) {
    envs_.push_back(std::make_unique<BridgeEnv>(env_cfg, e));
    action_rngs_.push_back(Rng::from_stream(derive_seed(cfg_.ppo.seed, 0x616374), e));
  }
  shuffle_rng_ = Rng::from_stream(cfg_.ppo.seed, 0x73687566);
  Rng init_rng = Rng::from_stream(cfg_.ppo.seed, 0x696E6974);
  PolicyConfig pc;
  pc.obs_dim = static_cast<int>(envs_.front()->obs_dim());
  pc.act_dim = BridgeEnv::act_dim();
  pc.hidden1 = cfg_.ppo.hidden1;
  pc.hidden2 = cfg_.ppo.hidden2;
  pc.init_log_std = cfg_.ppo.init_log_std;
  params_ = PolicyParams::init(pc, init_rng);
  adam_ = AdamState::make(params_.size());
  buffer_.allocate(cfg_.ppo.n_envs, cfg_.ppo.steps_per_env, pc.obs_dim, pc.act_dim);
}

TrainLogEntry Trainer::run_update() {
  CollectStats collected = collect_rollouts(params_, envs_, action_rngs_, buffer_,
                                            cfg_.n_threads, cfg_.ppo.reward_scale);
  global_step_ += static_cast<int64_t>(cfg_.ppo.n_envs) * cfg_.ppo.steps_per_env;
  buffer_.compute_advantages(cfg_.ppo.gamma, cfg_.ppo.gae_lambda);
  double lr = lr_schedule(global_step_, cfg_.ppo.total_steps, cfg_.ppo);
  UpdateStats stats = ppo_update(params_, adam_, buffer_, cfg_.ppo, lr, shuffle_rng_);
  update_ += 1;

  TrainLogEntry entry;
  entry.update = update_;
  entry.steps = global_step_;
  entry.episodes = collected.episodes;
  entry.mean_episode_reward = collected.mean_episode_reward;
  entry.mean_episode_hits = collected.mean_episode_hits;
  entry.approx_kl = stats.approx_kl;
  entry.lr = lr;
  entry.policy_loss = stats.policy_loss;
  entry.value_loss = stats.value_loss;
  entry.clip_fraction = stats.clip_fraction;
  entry.entropy = stats.entropy;
  entry.mean_step_reward = collected.mean_step_reward;
  entry.mean_score_term = collected.mean_score_term;
  entry.mean_contact_term = collected.mean_contact_term;
  entry.mean_distance_term = collected.mean_distance_term;
  entry.mean_effort_term = collected.mean_effort_term;
  return entry;
}

void Trainer::save_checkpoint(const std::string& path) const {
  CanonWriter w;
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.i64(params_.config.obs_dim);
  w.i64(params_.config.act_dim);
  w.i64(params_.config.hidden1);
  w.i64(params_.config.hidden2);
  w.f64(params_.config.init_log_std);
  w.f64_vec(params_.data);
  w.f64_vec(adam_.m);
  w.f64_vec(adam_.v);
  w.i64(adam_.t);
  w.i64(global_step_);
  w.i64(update_);
  w.u64(cfg_.ppo.seed);
  w.i64(cfg_.ppo.n_envs);
  write_rng(w, shuffle_rng_);
  for (const Rng& rng : action_rngs_) write_rng(w, rng);
  for (const auto& env : envs_) {
    std::vector<uint8_t> snap = env->save_snapshot();
    w.u64(snap.size());
    for (uint8_t b : snap) w.u8(b);
  }
  std::vector<uint8_t> bytes = w.take();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw CanonError("cannot write checkpoint: " + path);
  size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (written != bytes.size()) throw CanonError("short checkpoint write: " + path);
}

void Trainer::restore_checkpoint(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  CanonReader r(bytes);
  if (r.u32() != kCheckpointMagic) throw CanonError("not a checkpoint file: " + path);
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CanonError("incompatible checkpoint version " + std::to_string(version));
  }
  PolicyConfig pc;
  pc.obs_dim = static_cast<int>(r.i64());
  pc.act_dim = static_cast<int>(r.i64());
  pc.hidden1 = static_cast<int>(r.i64());
  pc.hidden2 = static_cast<int>(r.i64());
  pc.init_log_std = r.f64();
  if (!(pc == params_.config)) {
    throw CanonError("checkpoint policy layout does not match the configured run");
  }
  params_.data = r.f64_vec();
  adam_.m = r.f64_vec();
  adam_.v = r.f64_vec();
  adam_.t = r.i64();
  global_step_ = r.i64();
  update_ = static_cast<int>(r.i64());
  uint64_t seed = r.u64();
  int n_envs = static_cast<int>(r.i64());
  if (seed != cfg_.ppo.seed || n_envs != cfg_.ppo.n_envs) {
    throw CanonError("checkpoint env layout does not match the configured run");
  }
  read_rng(r, shuffle_rng_);
  for (Rng& rng : action_rngs_) read_rng(r, rng);
  for (auto& env : envs_) {
    uint64_t n = r.u64();
    std::vector<uint8_t> snap(n);
    for (uint64_t i = 0; i < n; ++i) snap[i] = r.u8();
    env->restore_snapshot(snap);
  }
}

PolicyParams Trainer::load_checkpoint_params(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  CanonReader r(bytes);
  if (r.u32() != kCheckpointMagic) throw CanonError("not a checkpoint file: " + path);
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CanonError("incompatible checkpoint version " + std::to_string(version));
  }
  PolicyParams p;
  p.config.obs_dim = static_cast<int>(r.i64());
  p.config.act_dim = static_cast<int>(r.i64());
  p.config.hidden1 = static_cast<int>(r.i64());
  p.config.hidden2 = static_cast<int>(r.i64());
  p.config.init_log_std = r.f64();
  p.data = r.f64_vec();
  if (p.data.size() != PolicyParams::param_count(p.config)) {
    throw CanonError("checkpoint parameter vector has the wrong length");
  }
  return p;
}

}  // namespace whacsim
