#pragma once

// Whac-A-Mole application logic: target spawning on a 3x3 grid, the three
// target-area placements, the velocity-constrained hit rule, the adaptive
// spawn curriculum and the four-component reward.
//
// App frame matches the canonical bridge frame (x right, y up, z forward).
// The target area is anchored relative to a fixed HMD pose; its local axes
// are x = lateral, y = in-plane up, z = through the plane in the hitting
// direction. Rows index the grid top to bottom, columns left to right.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "whacsim/config.hpp"
#include "whacsim/geom.hpp"
#include "whacsim/rng.hpp"

namespace whacsim {

enum class Difficulty { kEasy, kMedium, kHard };
enum class Placement { kLow, kMid, kHigh };
enum class CurriculumMode { kUniform, kAdaptive };

int max_simultaneous_targets(Difficulty d);
const char* difficulty_name(Difficulty d);
const char* placement_name(Placement p);
Difficulty parse_difficulty(const std::string& s);
Placement parse_placement(const std::string& s);

struct PlacementFrame {
  Vec3 offset;      // from the HMD anchor, meters
  double tilt_deg;  // rotation about the lateral axis

  static PlacementFrame preset(Placement p);

  // Target-area pose in the app frame.
  Pose pose(const Pose& hmd_anchor) const;
};

struct GameConfig {
  Difficulty difficulty = Difficulty::kMedium;
  Placement placement = Placement::kMid;
  bool constrained = true;
  double round_duration = 60.0;    // s
  double grid_spacing = 0.125;     // m
  double target_radius = 0.025;    // m
  double target_lifespan = 1.0;    // s
  double spawn_interval_max = 0.5; // s, intervals drawn uniform [0, max]
  double velocity_threshold = 0.8; // m/s along the placement hit axis
  uint64_t seed = 1;
  CurriculumMode curriculum = CurriculumMode::kUniform;
  double hammer_head_radius = 0.03;  // m
  Pose hammer_tip_offset{{0.0, -0.10, 0.0}, {}};  // relative to the controller
  Pose hmd_anchor{};  // pose the target area is anchored to; initial camera
  bool debug_obs = false;  // append target positions to the step log entries

  void validate() const;
  void apply_episode_config(const std::vector<std::pair<std::string, std::string>>& kv);
  static GameConfig from_config(const KeyValueConfig& cfg);
};

struct Target {
  enum class State { kActive, kHit, kExpired };
  int row = 0;
  int col = 0;
  Vec3 position{};
  double age = 0.0;
  State state = State::kActive;

  int cell() const { return row * 3 + col; }
};

// Episode-level spawn distribution: half uniform, half proportional to the
// previous episode's per-cell fail rates.
struct CurriculumState {
  std::array<int, 9> spawns{};
  std::array<int, 9> misses{};
  std::array<double, 9> probs{1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9,
                              1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9};

  static std::array<double, 9> distribution(const std::array<int, 9>& spawns,
                                            const std::array<int, 9>& misses);

  // Recomputes probs from the finished episode's counters and zeroes them.
  void finish_episode();

  int sample(Rng& rng) const;
  int sample_unoccupied(Rng& rng, const std::array<bool, 9>& occupied) const;
};

struct RewardWeights {
  double score = 10.0;    // w_s
  double contact = 2.5;   // w_c, additionally scaled by hammer speed
  double distance = 1.0;  // w_d
  double effort = 0.1;    // w_e
};

struct RewardBreakdown {
  double score_delta = 0.0;    // S: hits this step
  double contact_term = 0.0;   // C_c: -(slow contacts this step)
  double distance_term = 0.0;  // C_d: -(sum of distances to active targets)
  double effort_term = 0.0;    // C_e: -(mean fatigued motor-unit fraction)
  double hammer_speed = 0.0;   // v_h, m/s
  double total = 0.0;

  // total = w_s*S + w_c*v_h*C_c + w_d*C_d + w_e*C_e, evaluated in exactly
  // this order so the breakdown recomposes bitwise.
  static RewardBreakdown assemble(const RewardWeights& w, double s, double c_c, double c_d,
                                  double c_e, double v_h);
};

struct StepEvents {
  int hits = 0;
  int slow_contacts = 0;
  std::vector<int> hit_cells;
  std::vector<int> slow_cells;
};

struct PerCellCounters {
  std::array<int, 9> spawns{};
  std::array<int, 9> hits{};
  std::array<int, 9> misses{};
};

class Game {
 public:
  explicit Game(GameConfig cfg);

  // Starts a new episode; curriculum statistics carry over across episodes.
  void reset(const GameConfig& cfg);

  void spawn_update(double dt);
  // Scripted-scenario hook: places a target in the given cell immediately
  // (counted as a spawn), ignoring the spawn timer but honoring occupancy.
  bool force_spawn(int row, int col);
  StepEvents check_hit(const Vec3& hammer_tip, const Vec3& hammer_velocity);
  RewardBreakdown compute_reward(const StepEvents& events, const Vec3& hammer_tip,
                                 double hammer_speed, double effort_input) const;

  struct StepResult {
    RewardBreakdown reward;
    StepEvents events;
    bool finished = false;
    double time_feature = 1.0;
    Vec3 hammer_tip{};
    double hammer_speed = 0.0;
  };

  // One lockstep window [clock, t_next): spawn update, hit check with
  // finite-difference hammer velocity, reward.
  StepResult step(double t_next, const Pose& controller, double effort_input);

  const GameConfig& config() const { return cfg_; }
  const std::vector<Target>& targets() const { return targets_; }
  const Pose& plane_pose() const { return plane_pose_; }
  Vec3 hit_axis() const;  // unit vector through the plane, app frame
  Vec3 cell_position(int row, int col) const;

  double clock() const { return clock_; }
  bool finished() const { return finished_; }
  int score() const { return score_; }
  int hits() const { return hits_; }
  int misses() const { return misses_; }
  int slow_contacts() const { return slow_contacts_; }
  const PerCellCounters& cell_counters() const { return cells_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  const std::vector<double>& drawn_spawn_intervals() const { return drawn_intervals_; }

  std::vector<std::pair<std::string, double>> log_entries(double hammer_speed) const;

  std::vector<uint8_t> save_snapshot() const;
  void restore_snapshot(std::span<const uint8_t> bytes);

 private:
  void spawn_target();

  GameConfig cfg_;
  Pose plane_pose_{};
  Rng spawn_rng_{0};
  Rng curriculum_rng_{0};
  CurriculumState curriculum_{};
  std::vector<Target> targets_;
  double clock_ = 0.0;
  bool finished_ = false;
  double pending_spawn_in_ = 0.0;
  int score_ = 0;
  int hits_ = 0;
  int misses_ = 0;
  int slow_contacts_ = 0;
  PerCellCounters cells_{};
  Vec3 prev_tip_{};
  bool have_prev_tip_ = false;
  std::vector<double> drawn_intervals_;
};

}  // namespace whacsim
