#include "whacsim/arm.hpp"

#include <algorithm>
#include <cmath>

#include "whacsim/canon.hpp"

namespace whacsim {

namespace {

constexpr int kSubsteps = 10;

std::array<double, kArmDofs> gravity_torque(const ArmModel& m,
                                            const std::array<double, kArmDofs>& q) {
  // Potential V(q) = -g*(A*cos(elev) + B*cos(elev+flex)) with
  // A = m1*c1 + m2*L1, B = m2*c2; azimuth does not change height.
  double a = m.upper_arm_mass * 0.5 * m.upper_arm_length + m.forearm_mass * m.upper_arm_length;
  double b = m.forearm_mass * 0.5 * m.forearm_length;
  double elev = q[0];
  double flex = q[2];
  double shared = m.gravity * b * std::sin(elev + flex);
  return {-m.gravity * a * std::sin(elev) - shared, 0.0, -shared};
}

std::array<double, kArmDofs> dof_inertia(const ArmModel& m) {
  double c1 = 0.5 * m.upper_arm_length;
  double c2 = 0.5 * m.forearm_length;
  double shoulder = m.upper_arm_mass * c1 * c1 +
                    m.forearm_mass * (m.upper_arm_length + c2) * (m.upper_arm_length + c2);
  double elbow = m.forearm_mass * c2 * c2;
  return {std::max(shoulder, 1e-9), std::max(shoulder, 1e-9), std::max(elbow, 1e-9)};
}

}  // namespace

void ArmModel::validate() const {
  if (!(upper_arm_length > 0.0) || !(forearm_length > 0.0)) {
    throw ConfigError("arm segment lengths must be positive");
  }
  if (!(upper_arm_mass > 0.0) || !(forearm_mass > 0.0)) {
    throw ConfigError("arm segment masses must be positive");
  }
  for (int d = 0; d < kArmDofs; ++d) {
    if (!(joint_lower[d] < joint_upper[d])) {
      throw ConfigError("joint limit lower must be below upper");
    }
    if (!(max_torque[d] > 0.0)) throw ConfigError("max torque must be positive");
  }
  if (!(activation_tau > 0.0)) throw ConfigError("activation time constant must be positive");
  if (joint_damping < 0.0) throw ConfigError("joint damping must be non-negative");
  if (pool_size < 1) throw ConfigError("pool size must be at least 1");
  if (!(depth_far > 0.0)) throw ConfigError("depth far plane must be positive");
  if (!hammer_offset.valid(1e-9) || !hmd_pose.valid(1e-9)) {
    throw ConfigError("hammer offset / hmd pose must be valid poses");
  }
}

ArmModel ArmModel::from_config(const KeyValueConfig& cfg) {
  ArmModel m;
  m.upper_arm_length = cfg.get_f64("upper_arm_length", m.upper_arm_length);
  m.forearm_length = cfg.get_f64("forearm_length", m.forearm_length);
  m.upper_arm_mass = cfg.get_f64("upper_arm_mass", m.upper_arm_mass);
  m.forearm_mass = cfg.get_f64("forearm_mass", m.forearm_mass);
  const char* dof_names[kArmDofs] = {"shoulder_elevation", "shoulder_azimuth", "elbow_flexion"};
  for (int d = 0; d < kArmDofs; ++d) {
    m.joint_lower[d] = cfg.get_f64(std::string(dof_names[d]) + "_min", m.joint_lower[d]);
    m.joint_upper[d] = cfg.get_f64(std::string(dof_names[d]) + "_max", m.joint_upper[d]);
    m.max_torque[d] = cfg.get_f64(std::string(dof_names[d]) + "_max_torque", m.max_torque[d]);
  }
  m.activation_tau = cfg.get_f64("activation_tau", m.activation_tau);
  m.joint_damping = cfg.get_f64("joint_damping", m.joint_damping);
  m.gravity = cfg.get_f64("gravity", m.gravity);
  m.shoulder_origin.x = cfg.get_f64("shoulder_x", m.shoulder_origin.x);
  m.shoulder_origin.y = cfg.get_f64("shoulder_y", m.shoulder_origin.y);
  m.shoulder_origin.z = cfg.get_f64("shoulder_z", m.shoulder_origin.z);
  m.hammer_offset.position.x = cfg.get_f64("hammer_offset_x", m.hammer_offset.position.x);
  m.hammer_offset.position.y = cfg.get_f64("hammer_offset_y", m.hammer_offset.position.y);
  m.hammer_offset.position.z = cfg.get_f64("hammer_offset_z", m.hammer_offset.position.z);
  m.pool_size = static_cast<int>(cfg.get_i64("pool_size", m.pool_size));
  m.depth_far = cfg.get_f64("depth_far", m.depth_far);
  std::string channels = cfg.get_str("obs_channels", "gd");
  uint8_t mask = 0;
  for (char c : channels) {
    switch (c) {
      case 'r': mask |= wire::kChannelR; break;
      case 'g': mask |= wire::kChannelG; break;
      case 'b': mask |= wire::kChannelB; break;
      case 'd': mask |= wire::kChannelDepth; break;
      default: throw ConfigError("obs_channels may only contain r, g, b, d");
    }
  }
  m.obs_channels = mask;
  m.stack_delayed = cfg.get_bool("stack_delayed", m.stack_delayed);
  m.stack_delay = cfg.get_f64("stack_delay", m.stack_delay);
  m.fatigue.fatigue_rate = cfg.get_f64("fatigue_rate", m.fatigue.fatigue_rate);
  m.fatigue.recovery_rate = cfg.get_f64("fatigue_recovery_rate", m.fatigue.recovery_rate);
  m.fatigue.activation_drive = cfg.get_f64("fatigue_activation_drive", m.fatigue.activation_drive);
  m.fatigue.deactivation_drive =
      cfg.get_f64("fatigue_deactivation_drive", m.fatigue.deactivation_drive);
  m.fatigue.rest_multiplier = cfg.get_f64("fatigue_rest_multiplier", m.fatigue.rest_multiplier);
  m.validate();
  return m;
}

FkResult forward_kinematics(const ArmModel& model, const std::array<double, kArmDofs>& q) {
  double elev = q[0];
  double azim = q[1];
  double flex = q[2];

  Quat shoulder_rot = Quat::rot_y(azim) * Quat::rot_x(-elev);
  Vec3 upper_dir = shoulder_rot.rotate({0.0, -1.0, 0.0});
  Vec3 elbow_pos = model.shoulder_origin + model.upper_arm_length * upper_dir;

  Quat wrist_rot = Quat::rot_y(azim) * Quat::rot_x(-(elev + flex));
  Vec3 forearm_dir = wrist_rot.rotate({0.0, -1.0, 0.0});
  Vec3 wrist_pos = elbow_pos + model.forearm_length * forearm_dir;

  FkResult out;
  out.wrist = Pose{wrist_pos, wrist_rot};
  out.hammer_tip = out.wrist.compose(model.hammer_offset);
  return out;
}

ArmState step_dynamics(const ArmModel& model, const ArmState& state,
                       const std::array<double, kArmActuators>& controls, double dt) {
  if (!(dt > 0.0)) throw SimulationDiverged("step_dynamics requires dt > 0");
  double h = dt / kSubsteps;
  double decay = std::exp(-h / model.activation_tau);
  std::array<double, kArmDofs> inertia = dof_inertia(model);

  ArmState s = state;
  for (int sub = 0; sub < kSubsteps; ++sub) {
    for (int i = 0; i < kArmActuators; ++i) {
      double u = std::clamp(controls[i], 0.0, 1.0);
      s.activations[i] = u + (s.activations[i] - u) * decay;
    }
    std::array<double, kArmDofs> tau_g = gravity_torque(model, s.q);
    for (int d = 0; d < kArmDofs; ++d) {
      double tau = model.max_torque[d] * (s.activations[2 * d] - s.activations[2 * d + 1]) -
                   model.joint_damping * s.qdot[d] + tau_g[d];
      s.qdot[d] += h * tau / inertia[d];
      s.q[d] += h * s.qdot[d];
      if (s.q[d] < model.joint_lower[d]) {
        s.q[d] = model.joint_lower[d];
        if (s.qdot[d] < 0.0) s.qdot[d] = 0.0;
      } else if (s.q[d] > model.joint_upper[d]) {
        s.q[d] = model.joint_upper[d];
        if (s.qdot[d] > 0.0) s.qdot[d] = 0.0;
      }
    }
  }
  for (int d = 0; d < kArmDofs; ++d) {
    if (!std::isfinite(s.q[d]) || !std::isfinite(s.qdot[d])) {
      throw SimulationDiverged("arm state became non-finite");
    }
  }
  return s;
}

double neural_effort(std::span<const double> controls) {
  if (controls.empty()) return 0.0;
  double sum = 0.0;
  for (double u : controls) sum += u * u;
  return sum / static_cast<double>(controls.size());
}

std::vector<double> pooled_headset(const ArmModel& model, const wire::RgbdImage& image) {
  if (!image.dims_ok()) throw ObservationError("image buffers do not match dimensions");
  int pool = model.pool_size;
  if (image.width % pool != 0 || image.height % pool != 0) {
    throw ObservationError("image dimensions are not divisible by the pooling size");
  }
  int cells_x = image.width / pool;
  int cells_y = image.height / pool;
  double inv_count = 1.0 / (static_cast<double>(pool) * pool);

  std::vector<double> out;
  out.reserve(static_cast<size_t>(cells_x) * cells_y * 4);
  for (int ch = 0; ch < 4; ++ch) {
    if (!(model.obs_channels & (1 << ch))) continue;
    for (int cy = 0; cy < cells_y; ++cy) {
      for (int cx = 0; cx < cells_x; ++cx) {
        double sum = 0.0;
        for (int py = 0; py < pool; ++py) {
          size_t row = (static_cast<size_t>(cy) * pool + py) * image.width;
          for (int px = 0; px < pool; ++px) {
            size_t idx = row + static_cast<size_t>(cx) * pool + px;
            if (ch < 3) {
              sum += image.rgb[idx * 3 + ch] / 255.0;
            } else {
              double d = image.depth[idx];
              sum += std::isfinite(d) ? std::min(std::max(d, 0.0) / model.depth_far, 1.0) : 1.0;
            }
          }
        }
        out.push_back(sum * inv_count);
      }
    }
  }
  return out;
}

std::vector<double> observe(const ArmModel& model, const ArmState& state,
                            const std::array<double, kArmDofs>& qddot,
                            const FatigueState& fatigue, const wire::RgbdImage& image,
                            double time_feature) {
  (void)fatigue;  // carried alongside the proprioceptive block via reward channels
  std::vector<double> obs;
  std::vector<double> pooled = pooled_headset(model, image);
  obs.reserve(3 * kArmDofs + kArmActuators + 3 + pooled.size() + 1);
  for (double v : state.q) obs.push_back(v);
  for (double v : state.qdot) obs.push_back(v);
  for (double v : qddot) obs.push_back(v);
  for (double v : state.activations) obs.push_back(v);
  Vec3 tip = forward_kinematics(model, state.q).hammer_tip.position;
  obs.push_back(tip.x);
  obs.push_back(tip.y);
  obs.push_back(tip.z);
  obs.insert(obs.end(), pooled.begin(), pooled.end());
  obs.push_back(time_feature);
  for (double v : obs) {
    if (!std::isfinite(v)) throw ObservationError("non-finite observation entry");
  }
  return obs;
}

size_t observation_size(const ArmModel& model, uint16_t image_width, uint16_t image_height) {
  int pool = model.pool_size;
  if (image_width % pool != 0 || image_height % pool != 0) {
    throw ObservationError("image dimensions are not divisible by the pooling size");
  }
  size_t cells = static_cast<size_t>(image_width / pool) * (image_height / pool);
  int channels = 0;
  for (int ch = 0; ch < 4; ++ch) {
    if (model.obs_channels & (1 << ch)) ++channels;
  }
  return 3 * kArmDofs + kArmActuators + 3 + cells * channels + 1;
}

Arm::Arm(ArmModel model) : model_(std::move(model)), fatigue_(FatigueState::make(kArmActuators)) {
  model_.validate();
}

void Arm::reset() {
  state_ = ArmState{};
  fatigue_ = FatigueState::make(kArmActuators);
  qddot_ = {};
  last_controls_ = {};
  pooled_history_.clear();
}

void Arm::step(const std::array<double, kArmActuators>& controls, double dt) {
  ArmState next = step_dynamics(model_, state_, controls, dt);
  for (int d = 0; d < kArmDofs; ++d) {
    qddot_[d] = (next.qdot[d] - state_.qdot[d]) / dt;
  }
  std::array<double, kArmActuators> load{};
  for (int d = 0; d < kArmDofs; ++d) {
    double tl = 100.0 * std::abs(next.activations[2 * d] - next.activations[2 * d + 1]);
    load[2 * d] = tl;
    load[2 * d + 1] = tl;
  }
  fatigue_ = fatigue_step(model_.fatigue, fatigue_, load, dt);
  state_ = next;
  last_controls_ = controls;
}

Pose Arm::wrist_pose() const { return forward_kinematics(model_, state_.q).wrist; }

Pose Arm::hammer_tip_pose() const { return forward_kinematics(model_, state_.q).hammer_tip; }

void Arm::configure_stacking(int delay_steps) {
  delay_steps_ = std::max(delay_steps, 0);
  pooled_history_.clear();
}

std::vector<double> Arm::observe(const wire::RgbdImage& image, double time_feature) {
  std::vector<double> obs = whacsim::observe(model_, state_, qddot_, fatigue_, image, time_feature);
  if (model_.stack_delayed) {
    std::vector<double> pooled = pooled_headset(model_, image);
    pooled_history_.push_back(pooled);
    while (pooled_history_.size() > static_cast<size_t>(delay_steps_) + 1) {
      pooled_history_.pop_front();
    }
    const std::vector<double>& delayed = pooled_history_.front();
    // Delayed copy goes between the current pooled block and the time feature.
    obs.insert(obs.end() - 1, delayed.begin(), delayed.end());
  }
  return obs;
}

size_t Arm::observation_size(uint16_t image_width, uint16_t image_height) const {
  size_t base = whacsim::observation_size(model_, image_width, image_height);
  if (!model_.stack_delayed) return base;
  size_t prop = 3 * kArmDofs + kArmActuators + 3;
  return base + (base - prop - 1);
}

wire::StateUpdateMsg Arm::make_state_update(double t_current, double t_next,
                                            const CoordinateMap& to_app) const {
  FkResult fk = forward_kinematics(model_, state_.q);
  wire::StateUpdateMsg u;
  u.t_current = t_current;
  u.t_next = t_next;
  u.hmd = to_app.apply(model_.hmd_pose);
  u.controllers = {to_app.apply(fk.wrist)};
  u.channels.emplace_back("fatigue", fatigue_.mean_fatigued_fraction());
  u.channels.emplace_back("effort", neural_effort(last_controls_));
  return u;
}

std::vector<uint8_t> Arm::save_snapshot() const {
  CanonWriter w;
  w.u32(0x57534152);  // "WSAR"
  for (double v : state_.q) w.f64(v);
  for (double v : state_.qdot) w.f64(v);
  for (double v : state_.activations) w.f64(v);
  for (double v : qddot_) w.f64(v);
  for (double v : last_controls_) w.f64(v);
  for (const auto& unit : fatigue_.units) {
    w.f64(unit.rested);
    w.f64(unit.active);
    w.f64(unit.fatigued);
  }
  w.u64(pooled_history_.size());
  for (const auto& block : pooled_history_) w.f64_vec(block);
  return w.take();
}

void Arm::restore_snapshot(std::span<const uint8_t> bytes) {
  CanonReader r(bytes);
  if (r.u32() != 0x57534152) throw CanonError("not an arm snapshot");
  for (double& v : state_.q) v = r.f64();
  for (double& v : state_.qdot) v = r.f64();
  for (double& v : state_.activations) v = r.f64();
  for (double& v : qddot_) v = r.f64();
  for (double& v : last_controls_) v = r.f64();
  fatigue_ = FatigueState::make(kArmActuators);
  for (auto& unit : fatigue_.units) {
    unit.rested = r.f64();
    unit.active = r.f64();
    unit.fatigued = r.f64();
  }
  pooled_history_.clear();
  uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) pooled_history_.push_back(r.f64_vec());
}

}  // namespace whacsim
