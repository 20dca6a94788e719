#pragma once

// The simulated user: a 3-DOF right arm (shoulder elevation, shoulder
// azimuth, elbow flexion) driven by six antagonistic torque actuators with
// first-order activation dynamics, a rigidly held hammer, a fixed virtual
// HMD, and per-actuator fatigue.
//
// Frame convention: canonical right-handed frame, +x right, +y up,
// +z forward; at q = 0 the arm hangs straight down (-y). Positive elevation
// swings the arm forward about +x, azimuth rotates about +y, elbow flexion
// folds the forearm forward about the local lateral axis.

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "whacsim/config.hpp"
#include "whacsim/fatigue.hpp"
#include "whacsim/geom.hpp"
#include "whacsim/wire.hpp"

namespace whacsim {

inline constexpr int kArmDofs = 3;
inline constexpr int kArmActuators = 2 * kArmDofs;  // agonist/antagonist pairs

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ObservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArmModel {
  double upper_arm_length = 0.30;  // m
  double forearm_length = 0.25;    // m
  double upper_arm_mass = 2.0;     // kg
  double forearm_mass = 1.6;       // kg, includes hand + controller
  std::array<double, kArmDofs> joint_lower{-0.40, -1.40, 0.00};  // rad
  std::array<double, kArmDofs> joint_upper{2.90, 1.40, 2.60};    // rad
  std::array<double, kArmDofs> max_torque{30.0, 30.0, 15.0};     // N*m
  double activation_tau = 0.03;  // s
  double joint_damping = 1.0;    // N*m*s/rad
  double gravity = 9.81;         // m/s^2
  Vec3 shoulder_origin{0.15, -0.25, 0.0};
  // Hammer tip relative to the wrist; the default extends the forearm axis
  // so the full-extension reach is upper + forearm + |offset|.
  Pose hammer_offset{{0.0, -0.10, 0.0}, {}};
  Pose hmd_pose{};  // fixed head

  // Headset observation settings.
  int pool_size = 8;
  double depth_far = 2.0;  // m, depth normalization
  uint8_t obs_channels = wire::kChannelG | wire::kChannelDepth;
  bool stack_delayed = false;
  double stack_delay = 0.2;  // s

  FatigueParams fatigue{};

  void validate() const;
  static ArmModel from_config(const KeyValueConfig& cfg);
};

struct ArmState {
  std::array<double, kArmDofs> q{};
  std::array<double, kArmDofs> qdot{};
  std::array<double, kArmActuators> activations{};  // pairs: (agonist, antagonist) per DOF

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

struct FkResult {
  Pose wrist;       // the hammer grip / tracked controller pose
  Pose hammer_tip;  // wrist composed with the hammer offset
};

FkResult forward_kinematics(const ArmModel& model, const std::array<double, kArmDofs>& q);

// One control step: activation ODE first, then per-DOF torque
// max_torque*(a_ag - a_ant) - damping*qdot + gravity torque, integrated with
// semi-implicit Euler at fixed substep h = dt/10. Joints clamp to limits
// with velocity zeroing at contact.
ArmState step_dynamics(const ArmModel& model, const ArmState& state,
                       const std::array<double, kArmActuators>& controls, double dt);

// Mean of squared control signals.
double neural_effort(std::span<const double> controls);

// Pooled headset block: for each selected channel, mean over pool x pool
// pixel blocks; rgb scaled to [0,1], depth clamped at depth_far then scaled.
std::vector<double> pooled_headset(const ArmModel& model, const wire::RgbdImage& image);

// Flat observation: q, qdot, qddot, activations, hammer-tip position,
// pooled headset channels, then the time feature.
std::vector<double> observe(const ArmModel& model, const ArmState& state,
                            const std::array<double, kArmDofs>& qddot,
                            const FatigueState& fatigue, const wire::RgbdImage& image,
                            double time_feature);

size_t observation_size(const ArmModel& model, uint16_t image_width, uint16_t image_height);

// Stateful wrapper driving one simulated user through a session.
class Arm {
 public:
  explicit Arm(ArmModel model);

  void reset();
  // Dynamics plus fatigue; target load per pair is 100*|a_ag - a_ant|,
  // applied to both actuators of the pair.
  void step(const std::array<double, kArmActuators>& controls, double dt);

  const ArmModel& model() const { return model_; }
  const ArmState& state() const { return state_; }
  const FatigueState& fatigue() const { return fatigue_; }
  const std::array<double, kArmDofs>& qddot() const { return qddot_; }

  Pose wrist_pose() const;
  Pose hammer_tip_pose() const;

  // Number of steps the delayed visual copy lags when stacking is enabled.
  void configure_stacking(int delay_steps);

  std::vector<double> observe(const wire::RgbdImage& image, double time_feature);
  size_t observation_size(uint16_t image_width, uint16_t image_height) const;

  wire::StateUpdateMsg make_state_update(double t_current, double t_next,
                                         const CoordinateMap& to_app) const;

  std::vector<uint8_t> save_snapshot() const;
  void restore_snapshot(std::span<const uint8_t> bytes);

 private:
  ArmModel model_;
  ArmState state_{};
  FatigueState fatigue_;
  std::array<double, kArmDofs> qddot_{};
  std::array<double, kArmActuators> last_controls_{};
  int delay_steps_ = 0;
  std::deque<std::vector<double>> pooled_history_;
};

}  // namespace whacsim
