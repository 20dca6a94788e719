#include "whacsim/game.hpp"

#include <algorithm>
#include <cmath>

#include "whacsim/canon.hpp"

namespace whacsim {

int max_simultaneous_targets(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return 1;
    case Difficulty::kMedium: return 3;
    case Difficulty::kHard: return 5;
  }
  return 1;
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "?";
}

const char* placement_name(Placement p) {
  switch (p) {
    case Placement::kLow: return "low";
    case Placement::kMid: return "mid";
    case Placement::kHigh: return "high";
  }
  return "?";
}

Difficulty parse_difficulty(const std::string& s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "medium") return Difficulty::kMedium;
  if (s == "hard") return Difficulty::kHard;
  throw ConfigError("unknown difficulty: " + s);
}

Placement parse_placement(const std::string& s) {
  if (s == "low") return Placement::kLow;
  if (s == "mid") return Placement::kMid;
  if (s == "high") return Placement::kHigh;
  throw ConfigError("unknown placement: " + s);
}

PlacementFrame PlacementFrame::preset(Placement p) {
  switch (p) {
    case Placement::kLow: return {{0.15, -0.30, 0.35}, 45.0};
    case Placement::kMid: return {{0.15, -0.10, 0.40}, 0.0};
    case Placement::kHigh: return {{0.15, 0.20, 0.30}, -45.0};
  }
  return {{0.15, -0.10, 0.40}, 0.0};
}

Pose PlacementFrame::pose(const Pose& hmd_anchor) const {
  return {hmd_anchor.transform_point(offset),
          (hmd_anchor.orientation * Quat::rot_x(deg_to_rad(tilt_deg))).normalized()};
}

void GameConfig::validate() const {
  if (!(round_duration > 0.0)) throw ConfigError("round duration must be positive");
  if (!(grid_spacing > 0.0) || !(target_radius > 0.0) || !(target_lifespan > 0.0)) {
    throw ConfigError("grid spacing, target radius and lifespan must be positive");
  }
  if (spawn_interval_max < 0.0) throw ConfigError("spawn interval must be non-negative");
  if (!(velocity_threshold > 0.0)) throw ConfigError("velocity threshold must be positive");
  if (!(hammer_head_radius > 0.0)) throw ConfigError("hammer head radius must be positive");
  if (!hammer_tip_offset.valid(1e-9) || !hmd_anchor.valid(1e-9)) {
    throw ConfigError("hammer tip offset / hmd anchor must be valid poses");
  }
}

void GameConfig::apply_episode_config(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "seed") {
      seed = std::stoull(value);
    } else if (key == "difficulty") {
      difficulty = parse_difficulty(value);
    } else if (key == "placement") {
      placement = parse_placement(value);
    } else if (key == "constrained") {
      constrained = (value == "1" || value == "true");
    } else if (key == "curriculum") {
      if (value == "uniform") {
        curriculum = CurriculumMode::kUniform;
      } else if (value == "adaptive") {
        curriculum = CurriculumMode::kAdaptive;
      } else {
        throw ConfigError("unknown curriculum mode: " + value);
      }
    } else if (key == "round_duration") {
      round_duration = std::stod(value);
    } else if (key == "debug_obs") {
      debug_obs = (value == "1" || value == "true");
    }
    // Unknown keys are opaque to the app and ignored.
  }
  validate();
}

GameConfig GameConfig::from_config(const KeyValueConfig& cfg) {
  GameConfig g;
  g.difficulty = parse_difficulty(cfg.get_str("difficulty", difficulty_name(g.difficulty)));
  std::string placement = cfg.get_str("placement", placement_name(g.placement));
  if (placement != "random") g.placement = parse_placement(placement);
  g.constrained = cfg.get_bool("constrained", g.constrained);
  g.round_duration = cfg.get_f64("round_duration", g.round_duration);
  g.grid_spacing = cfg.get_f64("grid_spacing", g.grid_spacing);
  g.target_radius = cfg.get_f64("target_radius", g.target_radius);
  g.target_lifespan = cfg.get_f64("target_lifespan", g.target_lifespan);
  g.spawn_interval_max = cfg.get_f64("spawn_interval_max", g.spawn_interval_max);
  g.velocity_threshold = cfg.get_f64("velocity_threshold", g.velocity_threshold);
  g.seed = cfg.get_u64("seed", g.seed);
  g.curriculum = cfg.get_str("curriculum", "uniform") == "adaptive" ? CurriculumMode::kAdaptive
                                                                    : CurriculumMode::kUniform;
  g.hammer_head_radius = cfg.get_f64("hammer_head_radius", g.hammer_head_radius);
  g.hammer_tip_offset.position.x = cfg.get_f64("hammer_tip_x", g.hammer_tip_offset.position.x);
  g.hammer_tip_offset.position.y = cfg.get_f64("hammer_tip_y", g.hammer_tip_offset.position.y);
  g.hammer_tip_offset.position.z = cfg.get_f64("hammer_tip_z", g.hammer_tip_offset.position.z);
  g.debug_obs = cfg.get_bool("debug_obs", g.debug_obs);
  g.validate();
  return g;
}

std::array<double, 9> CurriculumState::distribution(const std::array<int, 9>& spawns,
                                                    const std::array<int, 9>& misses) {
  std::array<double, 9> fail{};
  double sum = 0.0;
  for (int c = 0; c < 9; ++c) {
    fail[c] = static_cast<double>(misses[c]) / std::max(1, spawns[c]);
    sum += fail[c];
  }
  std::array<double, 9> probs{};
  if (sum <= 0.0) {
    probs.fill(1.0 / 9.0);
    return probs;
  }
  for (int c = 0; c < 9; ++c) {
    probs[c] = 0.5 / 9.0 + 0.5 * fail[c] / sum;
  }
  return probs;
}

void CurriculumState::finish_episode() {
  probs = distribution(spawns, misses);
  spawns.fill(0);
  misses.fill(0);
}

int CurriculumState::sample(Rng& rng) const {
  double u = rng.uniform();
  double acc = 0.0;
  for (int c = 0; c < 9; ++c) {
    acc += probs[c];
    if (u < acc) return c;
  }
  return 8;
}

int CurriculumState::sample_unoccupied(Rng& rng, const std::array<bool, 9>& occupied) const {
  double total = 0.0;
  for (int c = 0; c < 9; ++c) {
    if (!occupied[c]) total += probs[c];
  }
  if (total <= 0.0) return -1;
  double u = rng.uniform() * total;
  double acc = 0.0;
  int last = -1;
  for (int c = 0; c < 9; ++c) {
    if (occupied[c]) continue;
    acc += probs[c];
    last = c;
    if (u < acc) return c;
  }
  return last;
}

RewardBreakdown RewardBreakdown::assemble(const RewardWeights& w, double s, double c_c,
                                          double c_d, double c_e, double v_h) {
  RewardBreakdown b;
  b.score_delta = s;
  b.contact_term = c_c;
  b.distance_term = c_d;
  b.effort_term = c_e;
  b.hammer_speed = v_h;
  b.total = w.score * s + w.contact * v_h * c_c + w.distance * c_d + w.effort * c_e;
  return b;
}

Game::Game(GameConfig cfg) : cfg_(cfg) { reset(cfg); }

void Game::reset(const GameConfig& cfg) {
  cfg_ = cfg;
  cfg_.validate();
  plane_pose_ = PlacementFrame::preset(cfg_.placement).pose(cfg_.hmd_anchor);
  spawn_rng_ = Rng::from_stream(cfg_.seed, 0);
  curriculum_rng_ = Rng::from_stream(cfg_.seed, 1);
  curriculum_.finish_episode();
  if (cfg_.curriculum == CurriculumMode::kUniform) {
    curriculum_.probs.fill(1.0 / 9.0);
  }
  targets_.clear();
  clock_ = 0.0;
  finished_ = false;
  pending_spawn_in_ = 0.0;
  score_ = hits_ = misses_ = slow_contacts_ = 0;
  cells_ = PerCellCounters{};
  prev_tip_ = Vec3{};
  have_prev_tip_ = false;
  drawn_intervals_.clear();
}

Vec3 Game::hit_axis() const { return plane_pose_.orientation.rotate({0.0, 0.0, 1.0}); }

Vec3 Game::cell_position(int row, int col) const {
  Vec3 local{(col - 1) * cfg_.grid_spacing, (1 - row) * cfg_.grid_spacing, 0.0};
  return plane_pose_.transform_point(local);
}

void Game::spawn_target() {
  std::array<bool, 9> occupied{};
  for (const Target& t : targets_) occupied[t.cell()] = true;
  int cell = curriculum_.sample_unoccupied(curriculum_rng_, occupied);
  if (cell < 0) return;  // all cells occupied; cannot happen below max 5 targets
  Target t;
  t.row = cell / 3;
  t.col = cell % 3;
  t.position = cell_position(t.row, t.col);
  t.age = 0.0;
  t.state = Target::State::kActive;
  targets_.push_back(t);
  cells_.spawns[cell] += 1;
  curriculum_.spawns[cell] += 1;
  double interval = spawn_rng_.uniform(0.0, cfg_.spawn_interval_max);
  drawn_intervals_.push_back(interval);
  pending_spawn_in_ = interval;
}

bool Game::force_spawn(int row, int col) {
  if (row < 0 || row > 2 || col < 0 || col > 2) return false;
  for (const Target& t : targets_) {
    if (t.row == row && t.col == col) return false;
  }
  Target t;
  t.row = row;
  t.col = col;
  t.position = cell_position(row, col);
  targets_.push_back(t);
  cells_.spawns[t.cell()] += 1;
  curriculum_.spawns[t.cell()] += 1;
  return true;
}

void Game::spawn_update(double dt) {
  // Age and expire.
  for (auto it = targets_.begin(); it != targets_.end();) {
    it->age += dt;
    if (it->age >= cfg_.target_lifespan) {
      misses_ += 1;
      cells_.misses[it->cell()] += 1;
      curriculum_.misses[it->cell()] += 1;
      it = targets_.erase(it);
    } else {
      ++it;
    }
  }
  pending_spawn_in_ -= dt;
  int max_active = max_simultaneous_targets(cfg_.difficulty);
  if (targets_.empty()) {
    spawn_target();
  } else if (pending_spawn_in_ <= 0.0 && static_cast<int>(targets_.size()) < max_active) {
    spawn_target();
  }
}

StepEvents Game::check_hit(const Vec3& hammer_tip, const Vec3& hammer_velocity) {
  StepEvents events;
  double contact_radius = cfg_.target_radius + cfg_.hammer_head_radius;
  double axis_speed = hammer_velocity.dot(hit_axis());
  for (auto it = targets_.begin(); it != targets_.end();) {
    Vec3 d = hammer_tip - it->position;
    if (d.dot(d) <= contact_radius * contact_radius) {
      bool hit = !cfg_.constrained || axis_speed >= cfg_.velocity_threshold;
      if (hit) {
        events.hits += 1;
        events.hit_cells.push_back(it->cell());
        score_ += 1;
        hits_ += 1;
        cells_.hits[it->cell()] += 1;
        it = targets_.erase(it);
        continue;
      }
      events.slow_contacts += 1;
      events.slow_cells.push_back(it->cell());
      slow_contacts_ += 1;
    }
    ++it;
  }
  return events;
}

RewardBreakdown Game::compute_reward(const StepEvents& events, const Vec3& hammer_tip,
                                     double hammer_speed, double effort_input) const {
  double c_d = 0.0;
  for (const Target& t : targets_) {
    c_d -= (hammer_tip - t.position).norm();
  }
  return RewardBreakdown::assemble(RewardWeights{}, static_cast<double>(events.hits),
                                   -static_cast<double>(events.slow_contacts), c_d,
                                   -effort_input, hammer_speed);
}

Game::StepResult Game::step(double t_next, const Pose& controller, double effort_input) {
  double dt = t_next - clock_;
  Vec3 tip = controller.compose(cfg_.hammer_tip_offset).position;
  Vec3 velocity{};
  if (have_prev_tip_ && dt > 0.0) {
    velocity = (1.0 / dt) * (tip - prev_tip_);
  }
  spawn_update(dt);
  StepEvents events = check_hit(tip, velocity);
  double speed = velocity.norm();
  RewardBreakdown reward = compute_reward(events, tip, speed, effort_input);
  clock_ = t_next;
  finished_ = clock_ >= cfg_.round_duration - 1e-9;
  prev_tip_ = tip;
  have_prev_tip_ = true;

  StepResult out;
  out.reward = reward;
  out.events = events;
  out.finished = finished_;
  out.time_feature = std::clamp(1.0 - clock_ / cfg_.round_duration, 0.0, 1.0);
  out.hammer_tip = tip;
  out.hammer_speed = speed;
  return out;
}

std::vector<std::pair<std::string, double>> Game::log_entries(double hammer_speed) const {
  std::vector<std::pair<std::string, double>> out;
  out.emplace_back("score", static_cast<double>(score_));
  out.emplace_back("hits", static_cast<double>(hits_));
  out.emplace_back("misses", static_cast<double>(misses_));
  out.emplace_back("slow_contacts", static_cast<double>(slow_contacts_));
  out.emplace_back("v_h", hammer_speed);
  for (int c = 0; c < 9; ++c) {
    std::string tag = "cell" + std::to_string(c);
    out.emplace_back(tag + "_spawns", static_cast<double>(cells_.spawns[c]));
    out.emplace_back(tag + "_hits", static_cast<double>(cells_.hits[c]));
    out.emplace_back(tag + "_misses", static_cast<double>(cells_.misses[c]));
  }
  if (cfg_.debug_obs) {
    out.emplace_back("n_targets", static_cast<double>(targets_.size()));
    for (size_t i = 0; i < 5; ++i) {
      Vec3 p = i < targets_.size() ? targets_[i].position : Vec3{};
      std::string tag = "target" + std::to_string(i);
      out.emplace_back(tag + "_x", p.x);
      out.emplace_back(tag + "_y", p.y);
      out.emplace_back(tag + "_z", p.z);
    }
  }
  return out;
}

std::vector<uint8_t> Game::save_snapshot() const {
  CanonWriter w;
  w.u32(0x5753474D);  // "WSGM"
  w.u8(static_cast<uint8_t>(cfg_.difficulty));
  w.u8(static_cast<uint8_t>(cfg_.placement));
  w.u8(cfg_.constrained ? 1 : 0);
  w.u8(static_cast<uint8_t>(cfg_.curriculum));
  w.u8(cfg_.debug_obs ? 1 : 0);
  w.f64(cfg_.round_duration);
  w.u64(cfg_.seed);
  auto rng_state = [&](const Rng& rng) {
    Rng::State s = rng.save();
    w.u64(s.counter);
    w.f64(s.cached_normal);
    w.u8(s.has_cached_normal ? 1 : 0);
  };
  rng_state(spawn_rng_);
  rng_state(curriculum_rng_);
  for (int c = 0; c < 9; ++c) {
    w.i64(curriculum_.spawns[c]);
    w.i64(curriculum_.misses[c]);
    w.f64(curriculum_.probs[c]);
  }
  w.u64(targets_.size());
  for (const Target& t : targets_) {
    w.i64(t.row);
    w.i64(t.col);
    w.f64(t.position.x);
    w.f64(t.position.y);
    w.f64(t.position.z);
    w.f64(t.age);
  }
  w.f64(clock_);
  w.u8(finished_ ? 1 : 0);
  w.f64(pending_spawn_in_);
  w.i64(score_);
  w.i64(hits_);
  w.i64(misses_);
  w.i64(slow_contacts_);
  for (int c = 0; c < 9; ++c) {
    w.i64(cells_.spawns[c]);
    w.i64(cells_.hits[c]);
    w.i64(cells_.misses[c]);
  }
  w.f64(prev_tip_.x);
  w.f64(prev_tip_.y);
  w.f64(prev_tip_.z);
  w.u8(have_prev_tip_ ? 1 : 0);
  return w.take();
}

void Game::restore_snapshot(std::span<const uint8_t> bytes) {
  CanonReader r(bytes);
  if (r.u32() != 0x5753474D) throw CanonError("not a game snapshot");
  cfg_.difficulty = static_cast<Difficulty>(r.u8());
  cfg_.placement = static_cast<Placement>(r.u8());
  cfg_.constrained = r.u8() != 0;
  cfg_.curriculum = static_cast<CurriculumMode>(r.u8());
  cfg_.debug_obs = r.u8() != 0;
  cfg_.round_duration = r.f64();
  cfg_.seed = r.u64();
  plane_pose_ = PlacementFrame::preset(cfg_.placement).pose(cfg_.hmd_anchor);
  auto rng_state = [&](Rng& rng) {
    Rng::State s;
    s.counter = r.u64();
    s.cached_normal = r.f64();
    s.has_cached_normal = r.u8() != 0;
    rng.restore(s);
  };
  rng_state(spawn_rng_);
  rng_state(curriculum_rng_);
  for (int c = 0; c < 9; ++c) {
    curriculum_.spawns[c] = static_cast<int>(r.i64());
    curriculum_.misses[c] = static_cast<int>(r.i64());
    curriculum_.probs[c] = r.f64();
  }
  targets_.clear();
  uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    Target t;
    t.row = static_cast<int>(r.i64());
    t.col = static_cast<int>(r.i64());
    t.position.x = r.f64();
    t.position.y = r.f64();
    t.position.z = r.f64();
    t.age = r.f64();
    targets_.push_back(t);
  }
  clock_ = r.f64();
  finished_ = r.u8() != 0;
  pending_spawn_in_ = r.f64();
  score_ = static_cast<int>(r.i64());
  hits_ = static_cast<int>(r.i64());
  misses_ = static_cast<int>(r.i64());
  slow_contacts_ = static_cast<int>(r.i64());
  for (int c = 0; c < 9; ++c) {
    cells_.spawns[c] = static_cast<int>(r.i64());
    cells_.hits[c] = static_cast<int>(r.i64());
    cells_.misses[c] = static_cast<int>(r.i64());
  }
  prev_tip_.x = r.f64();
  prev_tip_.y = r.f64();
  prev_tip_.z = r.f64();
  have_prev_tip_ = r.u8() != 0;
  drawn_intervals_.clear();
}

}  // namespace whacsim
