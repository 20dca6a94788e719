#include "whacsim/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "whacsim/canon.hpp"
#include "whacsim/server.hpp"
#include "whacsim/textio.hpp"

namespace whacsim {

namespace {

constexpr int kDebugTargetSlots = 5;

double find_entry(const std::vector<std::pair<std::string, double>>& entries,
                  const std::string& key, double def) {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return def;
}

}  // namespace

BridgeEnv::BridgeEnv(const BridgeEnvConfig& cfg, int env_id)
    : cfg_(cfg),
      env_id_(env_id),
      arm_(cfg.arm),
      placement_rng_(Rng::from_stream(derive_seed(cfg.master_seed, 0x706C6163), env_id)) {
  GameConfig game = cfg_.game;
  game.hmd_anchor = cfg_.arm.hmd_pose;
  game.debug_obs = cfg_.debug_obs;
  app_ = std::make_unique<WhacApp>(game, cfg_.episode_log_path);
  auto stream = std::make_unique<SyncAppStream>(*app_);
  sync_stream_ = stream.get();
  session_ = std::make_unique<Session>(std::move(stream),
                                       SessionConfig{cfg_.dt, cfg_.image_width, cfg_.image_height,
                                                     cfg_.channel_mask, wire::kDefaultMaxPayload});
  init_session();
}

BridgeEnv::BridgeEnv(const BridgeEnvConfig& cfg, int env_id, std::unique_ptr<ByteStream> stream)
    : cfg_(cfg),
      env_id_(env_id),
      arm_(cfg.arm),
      placement_rng_(Rng::from_stream(derive_seed(cfg.master_seed, 0x706C6163), env_id)) {
  session_ = std::make_unique<Session>(std::move(stream),
                                       SessionConfig{cfg_.dt, cfg_.image_width, cfg_.image_height,
                                                     cfg_.channel_mask, wire::kDefaultMaxPayload});
  init_session();
}

void BridgeEnv::init_session() {
  if (!cfg_.trace_path.empty()) {
    trace_ = std::make_unique<FrameDumpWriter>(cfg_.trace_path);
    session_->set_trace(trace_.get());
  }
  session_->hello();
  if (cfg_.debug_obs) {
    obs_dim_ = 3 * kArmDofs + kArmActuators + 3 + 3 * kDebugTargetSlots + 1;
  } else {
    if (cfg_.arm.stack_delayed) {
      arm_.configure_stacking(
          static_cast<int>(std::lround(cfg_.arm.stack_delay / cfg_.dt)));
    }
    obs_dim_ = arm_.observation_size(cfg_.image_width, cfg_.image_height);
  }
  reset();
}

std::vector<std::pair<std::string, std::string>> BridgeEnv::episode_config() {
  std::vector<std::pair<std::string, std::string>> kv;
  uint64_t seed = derive_seed(derive_seed(cfg_.master_seed, static_cast<uint64_t>(env_id_)),
                              static_cast<uint64_t>(episode_));
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("difficulty", difficulty_name(cfg_.game.difficulty));
  Placement placement = cfg_.game.placement;
  if (cfg_.randomize_placement) {
    placement = static_cast<Placement>(placement_rng_.uniform_int(3));
  }
  kv.emplace_back("placement", placement_name(placement));
  kv.emplace_back("constrained", cfg_.game.constrained ? "1" : "0");
  kv.emplace_back("curriculum",
                  cfg_.game.curriculum == CurriculumMode::kAdaptive ? "adaptive" : "uniform");
  kv.emplace_back("round_duration", f64_repr(cfg_.game.round_duration));
  kv.emplace_back("debug_obs", cfg_.debug_obs ? "1" : "0");
  return kv;
}

const std::vector<double>& BridgeEnv::reset() {
  last_obs_ = session_->reset(episode_config());
  episode_ += 1;
  step_in_episode_ = 0;
  ep_stats_ = EpisodeStats{};
  arm_.reset();
  assemble_observation();
  return obs_;
}

void BridgeEnv::assemble_observation() {
  double tf = last_obs_.time_feature;
  if (cfg_.debug_obs) {
    obs_.clear();
    obs_.reserve(obs_dim_);
    const ArmState& s = arm_.state();
    for (double v : s.q) obs_.push_back(v);
    for (double v : s.qdot) obs_.push_back(v);
    for (double v : arm_.qddot()) obs_.push_back(v);
    for (double v : s.activations) obs_.push_back(v);
    Vec3 tip = arm_.hammer_tip_pose().position;
    obs_.push_back(tip.x);
    obs_.push_back(tip.y);
    obs_.push_back(tip.z);
    for (int i = 0; i < kDebugTargetSlots; ++i) {
      std::string tag = "target" + std::to_string(i);
      obs_.push_back(find_entry(last_obs_.log_entries, tag + "_x", 0.0));
      obs_.push_back(find_entry(last_obs_.log_entries, tag + "_y", 0.0));
      obs_.push_back(find_entry(last_obs_.log_entries, tag + "_z", 0.0));
    }
    obs_.push_back(tf);
  } else {
    obs_ = arm_.observe(last_obs_.image, tf);
  }
  // Fixed network-input scaling for the proprioceptive block: velocities
  // and accelerations otherwise span hundreds and saturate the tanh
  // layers. Positions, activations, image cells and the time feature are
  // already order one.
  for (int d = 0; d < kArmDofs; ++d) {
    obs_[d] *= 0.5;
    obs_[kArmDofs + d] *= 0.1;
    obs_[2 * kArmDofs + d] *= 0.01;
  }
}

double BridgeEnv::last_log_entry(const std::string& key, double def) const {
  return find_entry(last_obs_.log_entries, key, def);
}

BridgeEnv::StepOutcome BridgeEnv::step(const std::array<double, kArmActuators>& controls) {
  arm_.step(controls, cfg_.dt);
  double t_current = static_cast<double>(step_in_episode_) * cfg_.dt;
  double t_next = static_cast<double>(step_in_episode_ + 1) * cfg_.dt;
  wire::StateUpdateMsg update = arm_.make_state_update(t_current, t_next, CoordinateMap{});
  last_obs_ = session_->step(update);
  step_in_episode_ += 1;

  StepOutcome out;
  out.reward = last_obs_.reward;
  out.done = last_obs_.is_finished;
  out.breakdown = RewardBreakdown::assemble(
      RewardWeights{}, find_entry(last_obs_.log_entries, "reward_score", 0.0),
      find_entry(last_obs_.log_entries, "reward_contact", 0.0),
      find_entry(last_obs_.log_entries, "reward_distance", 0.0),
      find_entry(last_obs_.log_entries, "reward_effort", 0.0),
      find_entry(last_obs_.log_entries, "v_h", 0.0));

  ep_stats_.reward += last_obs_.reward;
  ep_stats_.steps += 1;
  if (out.done) {
    ep_stats_.hits = static_cast<int>(find_entry(last_obs_.log_entries, "hits", 0.0));
    ep_stats_.misses = static_cast<int>(find_entry(last_obs_.log_entries, "misses", 0.0));
    ep_stats_.slow_contacts =
        static_cast<int>(find_entry(last_obs_.log_entries, "slow_contacts", 0.0));
    ep_stats_.score = static_cast<int>(find_entry(last_obs_.log_entries, "score", 0.0));
    out.completed = ep_stats_;
    out.final_log_entries = last_obs_.log_entries;
    reset();
  } else {
    assemble_observation();
  }
  return out;
}

std::vector<uint8_t> BridgeEnv::save_snapshot() const {
  if (!app_) throw CanonError("snapshots require an in-process environment");
  CanonWriter w;
  w.u32(0x5753454E);  // "WSEN"
  w.i64(env_id_);
  w.i64(episode_);
  w.i64(step_in_episode_);
  Rng::State rs = placement_rng_.save();
  w.u64(rs.counter);
  w.f64(rs.cached_normal);
  w.u8(rs.has_cached_normal ? 1 : 0);
  w.f64(ep_stats_.reward);
  w.i64(ep_stats_.steps);
  w.f64_vec(obs_);
  w.f64(session_->expected_t());
  w.f64(session_->last_time_feature());
  w.u8(session_->episode_active() ? 1 : 0);
  w.u8(session_->episode_finished() ? 1 : 0);
  const ServerAutomaton& auto_ = const_cast<SyncAppStream*>(sync_stream_)->automaton();
  w.u8(auto_.episode_active() ? 1 : 0);
  w.u8(auto_.episode_finished() ? 1 : 0);
  w.f64(auto_.expected_t());
  std::vector<uint8_t> arm_bytes = arm_.save_snapshot();
  w.u64(arm_bytes.size());
  for (uint8_t b : arm_bytes) w.u8(b);
  std::vector<uint8_t> app_bytes = app_->save_snapshot();
  w.u64(app_bytes.size());
  for (uint8_t b : app_bytes) w.u8(b);
  return w.take();
}

void BridgeEnv::restore_snapshot(std::span<const uint8_t> bytes) {
  if (!app_) throw CanonError("snapshots require an in-process environment");
  CanonReader r(bytes);
  if (r.u32() != 0x5753454E) throw CanonError("not an environment snapshot");
  env_id_ = static_cast<int>(r.i64());
  episode_ = static_cast<int>(r.i64());
  step_in_episode_ = static_cast<int>(r.i64());
  Rng::State rs;
  rs.counter = r.u64();
  rs.cached_normal = r.f64();
  rs.has_cached_normal = r.u8() != 0;
  placement_rng_.restore(rs);
  ep_stats_ = EpisodeStats{};
  ep_stats_.reward = r.f64();
  ep_stats_.steps = static_cast<int>(r.i64());
  obs_ = r.f64_vec();
  double expected_t = r.f64();
  double last_tf = r.f64();
  bool active = r.u8() != 0;
  bool finished = r.u8() != 0;
  bool srv_active = r.u8() != 0;
  bool srv_finished = r.u8() != 0;
  double srv_expected_t = r.f64();
  uint64_t arm_n = r.u64();
  std::vector<uint8_t> arm_bytes(arm_n);
  for (uint64_t i = 0; i < arm_n; ++i) arm_bytes[i] = r.u8();
  arm_.restore_snapshot(arm_bytes);
  uint64_t app_n = r.u64();
  std::vector<uint8_t> app_bytes(app_n);
  for (uint64_t i = 0; i < app_n; ++i) app_bytes[i] = r.u8();
  app_->restore_snapshot(app_bytes);
  session_->resume_episode(expected_t, last_tf, active, finished);
  sync_stream_->automaton().resume_episode(srv_active, srv_finished, srv_expected_t);
}

CollectStats collect_rollouts(const PolicyParams& params,
                              std::vector<std::unique_ptr<BridgeEnv>>& envs,
                              std::vector<Rng>& action_rngs, RolloutBuffer& buffer,
                              int n_threads, double reward_scale) {
  int n_envs = static_cast<int>(envs.size());
  if (n_envs != buffer.n_envs || action_rngs.size() != envs.size()) {
    throw std::invalid_argument("env count does not match buffer layout");
  }

  struct EnvTotals {
    int episodes = 0;
    double episode_reward = 0.0;
    double episode_hits = 0.0;
  };
  std::vector<EnvTotals> totals(n_envs);
  std::vector<std::string> env_errors(n_envs);

  auto run_env = [&](int e) {
    BridgeEnv& env = *envs[e];
    Rng& rng = action_rngs[e];
    PolicyForward fwd;
    std::array<double, kArmActuators> controls{};
    std::vector<double> action(buffer.act_dim);
    for (int t = 0; t < buffer.steps; ++t) {
      size_t idx = buffer.flat(e, t);
      const std::vector<double>& obs = env.observation();
      std::copy(obs.begin(), obs.end(), buffer.obs.begin() + idx * buffer.obs_dim);
      policy_forward(params, obs, fwd);
      policy_sample(params, fwd, rng, action);
      double logp = policy_log_prob(params, fwd, action);
      for (int a = 0; a < buffer.act_dim; ++a) {
        buffer.actions[idx * buffer.act_dim + a] = action[a];
        controls[a] = std::clamp(action[a], 0.0, 1.0);
      }
      buffer.log_probs[idx] = logp;
      buffer.values[idx] = fwd.value;
      auto outcome = env.step(controls);
      buffer.rewards[idx] = outcome.reward * reward_scale;
      buffer.dones[idx] = outcome.done ? 1 : 0;
      buffer.breakdown[idx] = outcome.breakdown;
      if (outcome.done) {
        totals[e].episodes += 1;
        totals[e].episode_reward += outcome.completed.reward;
        totals[e].episode_hits += outcome.completed.hits;
      }
    }
    policy_forward(params, env.observation(), fwd);
    buffer.bootstrap[e] = fwd.value;
  };

  // A failing session marks its env dead and aborts the run after the
  // join; whatever the healthy envs collected stays in the buffer.
  auto run_env_guarded = [&](int e) {
    try {
      run_env(e);
    } catch (const std::exception& ex) {
      env_errors[e] = ex.what();
    }
  };

  int workers = std::max(1, std::min(n_threads, n_envs));
  if (workers == 1) {
    for (int e = 0; e < n_envs; ++e) run_env_guarded(e);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (int e = w; e < n_envs; e += workers) run_env_guarded(e);
      });
    }
    for (auto& th : threads) th.join();
  }
  for (int e = 0; e < n_envs; ++e) {
    if (!env_errors[e].empty()) {
      throw TrainingDiverged("env " + std::to_string(e) + " died during rollout collection: " +
                             env_errors[e]);
    }
  }

  CollectStats stats;
  double reward_sum = 0.0, score_sum = 0.0, contact_sum = 0.0, dist_sum = 0.0, effort_sum = 0.0;
  for (size_t i = 0; i < buffer.total(); ++i) {
    reward_sum += buffer.rewards[i] / reward_scale;
    score_sum += buffer.breakdown[i].score_delta;
    contact_sum += buffer.breakdown[i].contact_term;
    dist_sum += buffer.breakdown[i].distance_term;
    effort_sum += buffer.breakdown[i].effort_term;
  }
  double n = static_cast<double>(buffer.total());
  stats.mean_step_reward = reward_sum / n;
  stats.mean_score_term = score_sum / n;
  stats.mean_contact_term = contact_sum / n;
  stats.mean_distance_term = dist_sum / n;
  stats.mean_effort_term = effort_sum / n;
  double ep_reward = 0.0, ep_hits = 0.0;
  for (const auto& t : totals) {
    stats.episodes += t.episodes;
    ep_reward += t.episode_reward;
    ep_hits += t.episode_hits;
  }
  if (stats.episodes > 0) {
    stats.mean_episode_reward = ep_reward / stats.episodes;
    stats.mean_episode_hits = ep_hits / stats.episodes;
  }
  return stats;
}

std::string eval_record_json(const EvalRoundRecord& rec) {
  std::string out = "{";
  out += "\"difficulty\":\"" + rec.difficulty + "\"";
  out += ",\"placement\":\"" + rec.placement + "\"";
  out += ",\"round\":" + std::to_string(rec.round);
  out += ",\"hits\":" + std::to_string(rec.hits);
  out += ",\"misses\":" + std::to_string(rec.misses);
  out += ",\"slow_contacts\":" + std::to_string(rec.slow_contacts);
  out += ",\"score\":" + std::to_string(rec.score);
  out += ",\"hit_rate\":" + f64_repr(rec.hit_rate);
  out += ",\"max_fatigued\":" + f64_repr(rec.max_fatigued);
  out += ",\"episode_reward\":" + f64_repr(rec.episode_reward);
  auto arr = [&out](const char* key, const std::array<int, 9>& a) {
    out += ",\"";
    out += key;
    out += "\":[";
    for (int i = 0; i < 9; ++i) {
      if (i) out += ",";
      out += std::to_string(a[i]);
    }
    out += "]";
  };
  arr("cell_spawns", rec.cell_spawns);
  arr("cell_hits", rec.cell_hits);
  arr("cell_misses", rec.cell_misses);
  auto vec = [&out](const char* key, const std::vector<double>& v) {
    out += ",\"";
    out += key;
    out += "\":[";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += f64_repr(v[i]);
    }
    out += "]";
  };
  vec("hitting_speeds", rec.hitting_speeds);
  vec("hammer_depths", rec.hammer_depths);
  out += "}";
  return out;
}

std::vector<EvalRoundRecord> evaluate_config(const PolicyParams& params,
                                             const BridgeEnvConfig& cfg, int n_rounds,
                                             uint64_t eval_seed, int env_id) {
  BridgeEnvConfig local = cfg;
  local.master_seed = eval_seed;
  local.randomize_placement = false;
  BridgeEnv env(local, env_id);
  if (env.obs_dim() != static_cast<size_t>(params.config.obs_dim)) {
    throw std::invalid_argument("policy was trained with a different observation layout");
  }

  std::vector<EvalRoundRecord> records;
  PolicyForward fwd;
  std::array<double, kArmActuators> controls{};
  for (int round = 0; round < n_rounds; ++round) {
    EvalRoundRecord rec;
    rec.difficulty = difficulty_name(local.game.difficulty);
    rec.placement = placement_name(local.game.placement);
    rec.round = round;
    int prev_hits = 0;
    for (;;) {
      policy_forward(params, env.observation(), fwd);
      for (int a = 0; a < kArmActuators; ++a) controls[a] = std::clamp(fwd.mean[a], 0.0, 1.0);
      auto outcome = env.step(controls);
      const auto& entries =
          outcome.done ? outcome.final_log_entries : env.last_observation_msg().log_entries;
      int hits_now = static_cast<int>(find_entry(entries, "hits", 0.0));
      double v_h = find_entry(entries, "v_h", 0.0);
      for (int h = prev_hits; h < hits_now; ++h) rec.hitting_speeds.push_back(v_h);
      prev_hits = hits_now;
      rec.hammer_depths.push_back(find_entry(entries, "hammer_depth", 0.0));
      rec.max_fatigued = std::max(rec.max_fatigued, env.arm().fatigue().mean_fatigued_fraction());
      if (outcome.done) {
        rec.hits = outcome.completed.hits;
        rec.misses = outcome.completed.misses;
        rec.slow_contacts = outcome.completed.slow_contacts;
        rec.score = outcome.completed.score;
        rec.episode_reward = outcome.completed.reward;
        for (int c = 0; c < 9; ++c) {
          std::string tag = "cell" + std::to_string(c);
          rec.cell_spawns[c] = static_cast<int>(find_entry(entries, tag + "_spawns", 0.0));
          rec.cell_hits[c] = static_cast<int>(find_entry(entries, tag + "_hits", 0.0));
          rec.cell_misses[c] = static_cast<int>(find_entry(entries, tag + "_misses", 0.0));
        }
        int denom = rec.hits + rec.misses;
        rec.hit_rate = denom > 0 ? static_cast<double>(rec.hits) / denom : 0.0;
        records.push_back(rec);
        break;
      }
    }
  }
  return records;
}

std::vector<EvalRoundRecord> evaluate_policy(const PolicyParams& params,
                                             const BridgeEnvConfig& base, int n_rounds,
                                             uint64_t eval_seed) {
  std::vector<EvalRoundRecord> all;
  int env_id = 9000;
  // base.trace_path / episode_log_path act as filename prefixes here, one
  // file per grid configuration.
  auto with_paths = [&base](BridgeEnvConfig cfg) {
    std::string tag = std::string("_") + difficulty_name(cfg.game.difficulty) + "_" +
                      placement_name(cfg.game.placement);
    if (!base.trace_path.empty()) cfg.trace_path = base.trace_path + tag + ".dump";
    if (!base.episode_log_path.empty()) {
      cfg.episode_log_path = base.episode_log_path + tag + ".jsonl";
    }
    return cfg;
  };
  // Difficulty sweep at mid placement, then placement sweep at medium.
  for (Difficulty d : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard}) {
    BridgeEnvConfig cfg = base;
    cfg.game.difficulty = d;
    cfg.game.placement = Placement::kMid;
    auto recs = evaluate_config(params, with_paths(cfg), n_rounds, eval_seed, env_id++);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  for (Placement p : {Placement::kLow, Placement::kMid, Placement::kHigh}) {
    BridgeEnvConfig cfg = base;
    cfg.game.difficulty = Difficulty::kMedium;
    cfg.game.placement = p;
    auto recs = evaluate_config(params, with_paths(cfg), n_rounds, eval_seed, env_id++);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return all;
}

}  // namespace whacsim
