#include "whacsim/app.hpp"

#include <fstream>

#include "whacsim/canon.hpp"

namespace whacsim {

std::string episode_record_json(const EpisodeRecord& rec) {
  std::string out = "{";
  out += "\"episode\":" + std::to_string(rec.episode);
  out += ",\"hits\":" + std::to_string(rec.hits);
  out += ",\"misses\":" + std::to_string(rec.misses);
  out += ",\"slow_contacts\":" + std::to_string(rec.slow_contacts);
  out += ",\"score\":" + std::to_string(rec.score);
  out += ",\"difficulty\":\"" + rec.difficulty + "\"";
  out += ",\"placement\":\"" + rec.placement + "\"";
  out += ",\"constrained\":" + std::string(rec.constrained ? "true" : "false");
  out += ",\"seed\":" + std::to_string(rec.seed);
  out += ",\"per_cell\":[";
  for (int c = 0; c < 9; ++c) {
    if (c) out += ",";
    out += "{\"spawns\":" + std::to_string(rec.per_cell.spawns[c]);
    out += ",\"hits\":" + std::to_string(rec.per_cell.hits[c]);
    out += ",\"misses\":" + std::to_string(rec.per_cell.misses[c]) + "}";
  }
  out += "]}";
  return out;
}

WhacApp::WhacApp(GameConfig base, std::string episode_log_path)
    : base_cfg_(base), game_(base), episode_log_path_(std::move(episode_log_path)) {}

wire::HelloAckMsg WhacApp::on_hello(const wire::HelloMsg& hello) {
  if (hello.version != wire::kProtocolVersion) {
    throw ProtocolError(ProtocolErrorCode::kProtocolViolation,
                        "unsupported protocol version " + std::to_string(hello.version));
  }
  if (hello.width == 0 || hello.height == 0) {
    throw ProtocolError(ProtocolErrorCode::kProtocolViolation, "image dimensions must be nonzero");
  }
  negotiated_ = wire::HelloAckMsg{hello.version, hello.dt, hello.width, hello.height,
                                  hello.channel_mask};
  hello_done_ = true;
  return negotiated_;
}

wire::ObservationMsg WhacApp::on_reset(
    const std::vector<std::pair<std::string, std::string>>& episode_config) {
  GameConfig cfg = base_cfg_;
  cfg.apply_episode_config(episode_config);
  episodes_started_ += 1;
  episode_open_ = true;
  have_hammer_ = false;
  hmd_ = cfg.hmd_anchor;
  game_.reset(cfg);
  return make_observation(nullptr);
}

wire::ObservationMsg WhacApp::on_step(const wire::StateUpdateMsg& update) {
  if (update.controllers.empty()) {
    throw ProtocolError(ProtocolErrorCode::kProtocolViolation,
                        "state update carries no controller pose");
  }
  hmd_ = update.hmd;
  double effort = 0.0;
  for (const auto& [key, value] : update.channels) {
    if (key == "fatigue") effort = value;
  }
  Game::StepResult step = game_.step(update.t_next, update.controllers.front(), effort);
  hammer_tip_ = step.hammer_tip;
  have_hammer_ = true;
  if (step.finished && episode_open_) finish_episode();
  return make_observation(&step);
}

wire::ObservationMsg WhacApp::make_observation(const Game::StepResult* step) {
  RenderScene scene;
  scene.camera = hmd_;
  scene.width = negotiated_.width;
  scene.height = negotiated_.height;
  scene.plane = game_.plane_pose();
  for (const Target& t : game_.targets()) {
    scene.targets.push_back({t.position, game_.config().target_radius,
                             t.age / game_.config().target_lifespan});
  }
  if (have_hammer_) {
    scene.hammer = hammer_tip_;
    scene.hammer_radius = game_.config().hammer_head_radius;
  }

  wire::ObservationMsg obs;
  obs.image = render_rgbd(scene);
  if (step) {
    obs.reward = step->reward.total;
    obs.is_finished = step->finished;
    obs.time_feature = step->time_feature;
    obs.log_entries = game_.log_entries(step->hammer_speed);
    Vec3 depth_rel = step->hammer_tip - game_.plane_pose().position;
    obs.log_entries.emplace_back("hammer_depth", depth_rel.dot(game_.hit_axis()));
    obs.log_entries.emplace_back("reward_score", step->reward.score_delta);
    obs.log_entries.emplace_back("reward_contact", step->reward.contact_term);
    obs.log_entries.emplace_back("reward_distance", step->reward.distance_term);
    obs.log_entries.emplace_back("reward_effort", step->reward.effort_term);
  } else {
    obs.reward = 0.0;
    obs.is_finished = false;
    obs.time_feature = 1.0;
    obs.log_entries = game_.log_entries(0.0);
  }
  return obs;
}

void WhacApp::finish_episode() {
  EpisodeRecord rec;
  rec.episode = episodes_started_;
  rec.hits = game_.hits();
  rec.misses = game_.misses();
  rec.slow_contacts = game_.slow_contacts();
  rec.score = game_.score();
  rec.per_cell = game_.cell_counters();
  rec.difficulty = difficulty_name(game_.config().difficulty);
  rec.placement = placement_name(game_.config().placement);
  rec.constrained = game_.config().constrained;
  rec.seed = game_.config().seed;
  completed_.push_back(rec);
  episode_open_ = false;
  if (!episode_log_path_.empty()) {
    std::ofstream out(episode_log_path_, std::ios::app);
    out << episode_record_json(rec) << "\n";
  }
}

std::vector<uint8_t> WhacApp::save_snapshot() const {
  CanonWriter w;
  w.u32(0x57534150);  // "WSAP"
  std::vector<uint8_t> game_bytes = game_.save_snapshot();
  w.u64(game_bytes.size());
  for (uint8_t b : game_bytes) w.u8(b);
  w.u8(hello_done_ ? 1 : 0);
  w.u64(negotiated_.version);
  w.f64(negotiated_.dt);
  w.u64(negotiated_.width);
  w.u64(negotiated_.height);
  w.u8(negotiated_.channel_mask);
  w.i64(episodes_started_);
  w.u8(episode_open_ ? 1 : 0);
  w.u8(have_hammer_ ? 1 : 0);
  w.f64(hammer_tip_.x);
  w.f64(hammer_tip_.y);
  w.f64(hammer_tip_.z);
  w.f64(hmd_.position.x);
  w.f64(hmd_.position.y);
  w.f64(hmd_.position.z);
  w.f64(hmd_.orientation.w);
  w.f64(hmd_.orientation.x);
  w.f64(hmd_.orientation.y);
  w.f64(hmd_.orientation.z);
  return w.take();
}

void WhacApp::restore_snapshot(std::span<const uint8_t> bytes) {
  CanonReader r(bytes);
  if (r.u32() != 0x57534150) throw CanonError("not an app snapshot");
  uint64_t n = r.u64();
  std::vector<uint8_t> game_bytes(n);
  for (uint64_t i = 0; i < n; ++i) game_bytes[i] = r.u8();
  game_.restore_snapshot(game_bytes);
  hello_done_ = r.u8() != 0;
  negotiated_.version = static_cast<uint16_t>(r.u64());
  negotiated_.dt = r.f64();
  negotiated_.width = static_cast<uint16_t>(r.u64());
  negotiated_.height = static_cast<uint16_t>(r.u64());
  negotiated_.channel_mask = r.u8();
  episodes_started_ = static_cast<int>(r.i64());
  episode_open_ = r.u8() != 0;
  have_hammer_ = r.u8() != 0;
  hammer_tip_.x = r.f64();
  hammer_tip_.y = r.f64();
  hammer_tip_.z = r.f64();
  hmd_.position.x = r.f64();
  hmd_.position.y = r.f64();
  hmd_.position.z = r.f64();
  hmd_.orientation.w = r.f64();
  hmd_.orientation.x = r.f64();
  hmd_.orientation.y = r.f64();
  hmd_.orientation.z = r.f64();
}

}  // namespace whacsim
