#include <doctest.h>

#include <cmath>

#include "whacsim/arm.hpp"
#include "whacsim/rng.hpp"

using namespace whacsim;

namespace {

ArmModel default_model() { return ArmModel{}; }

std::array<double, kArmDofs> random_q(const ArmModel& m, Rng& rng) {
  std::array<double, kArmDofs> q;
  for (int d = 0; d < kArmDofs; ++d) q[d] = rng.uniform(m.joint_lower[d], m.joint_upper[d]);
  return q;
}

}  // namespace

TEST_CASE("fk zero configuration points the arm straight down") {
  ArmModel m = default_model();
  FkResult fk = forward_kinematics(m, {0, 0, 0});
  Vec3 expected = m.shoulder_origin + Vec3{0, -(m.upper_arm_length + m.forearm_length), 0};
  CHECK((fk.wrist.position - expected).norm() < 1e-12);
}

TEST_CASE("fk right-angle elbow bends the forearm forward") {
  ArmModel m = default_model();
  FkResult fk = forward_kinematics(m, {0, 0, kPi / 2});
  Vec3 expected = m.shoulder_origin + Vec3{0, -m.upper_arm_length, m.forearm_length};
  CHECK((fk.wrist.position - expected).norm() < 1e-12);
}

TEST_CASE("fk satisfies the triangle inequality over random configurations") {
  ArmModel m = default_model();
  Rng rng(11);
  double reach = m.upper_arm_length + m.forearm_length;
  for (int i = 0; i < 1000; ++i) {
    FkResult fk = forward_kinematics(m, random_q(m, rng));
    CHECK((fk.wrist.position - m.shoulder_origin).norm() <= reach + 1e-12);
  }
}

TEST_CASE("hammer tip never exceeds the extended reach bound") {
  ArmModel m = default_model();
  Rng rng(17);
  double bound =
      m.upper_arm_length + m.forearm_length + m.hammer_offset.position.norm();
  for (int i = 0; i < 1000; ++i) {
    FkResult fk = forward_kinematics(m, random_q(m, rng));
    CHECK((fk.hammer_tip.position - m.shoulder_origin).norm() <= bound + 1e-12);
  }
}

TEST_CASE("zero controls, zero gravity, at rest: state unchanged") {
  ArmModel m = default_model();
  m.gravity = 0.0;
  ArmState s{};
  ArmState next = step_dynamics(m, s, {0, 0, 0, 0, 0, 0}, 0.05);
  CHECK(next == s);
}

TEST_CASE("activation follows the first-order closed form") {
  ArmModel m = default_model();
  m.gravity = 0.0;
  m.activation_tau = 0.03;
  ArmState s{};
  std::array<double, kArmActuators> u{};
  u[0] = 1.0;
  double t = 0.0;
  while (t < 0.3 - 1e-9) {
    s = step_dynamics(m, s, u, 0.05);
    t += 0.05;
  }
  double expected = 1.0 - std::exp(-t / m.activation_tau);
  CHECK(std::abs(s.activations[0] - expected) < 1e-3);
}

TEST_CASE("gravity pendulum conserves energy within 1% over 10 s") {
  // Single-DOF pendulum: massive upper arm, negligible forearm, no damping.
  ArmModel m = default_model();
  m.upper_arm_length = 2.4;
  m.upper_arm_mass = 2.0;
  m.forearm_length = 1e-6;
  m.forearm_mass = 1e-9;
  m.joint_damping = 0.0;
  m.joint_lower = {-3.0, -1.4, 0.0};
  m.joint_upper = {3.0, 1.4, 2.6};

  double c1 = 0.5 * m.upper_arm_length;
  double c2 = 0.5 * m.forearm_length;
  double inertia = m.upper_arm_mass * c1 * c1 +
                   m.forearm_mass * (m.upper_arm_length + c2) * (m.upper_arm_length + c2);
  double a = m.upper_arm_mass * c1 + m.forearm_mass * m.upper_arm_length;
  auto energy = [&](const ArmState& s) {
    return 0.5 * inertia * s.qdot[0] * s.qdot[0] - m.gravity * a * std::cos(s.q[0]);
  };

  ArmState s{};
  s.q[0] = 1.0;
  double e0 = energy(s);
  double scale = m.gravity * a;  // potential-energy scale of the swing
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {  // 10 s at dt = 0.05, substep h = 0.005
    s = step_dynamics(m, s, {0, 0, 0, 0, 0, 0}, 0.05);
    worst = std::max(worst, std::abs(energy(s) - e0));
  }
  CHECK(worst / scale < 0.01);
  // The pendulum actually swings.
  CHECK(std::abs(s.q[0]) < 1.0 + 1e-9);
}

TEST_CASE("step_dynamics is bitwise deterministic") {
  ArmModel m = default_model();
  ArmState s{};
  s.q = {0.4, -0.2, 0.9};
  s.qdot = {0.1, 0.0, -0.3};
  std::array<double, kArmActuators> u{0.7, 0.1, 0.3, 0.3, 0.9, 0.0};
  ArmState a = step_dynamics(m, s, u, 0.05);
  ArmState b = step_dynamics(m, s, u, 0.05);
  CHECK(a == b);
}

TEST_CASE("joint limits clamp with velocity zeroing") {
  ArmModel m = default_model();
  m.gravity = 0.0;
  ArmState s{};
  s.q[2] = m.joint_upper[2] - 1e-4;
  std::array<double, kArmActuators> u{};
  u[4] = 1.0;  // elbow agonist drives into the limit
  for (int i = 0; i < 40; ++i) s = step_dynamics(m, s, u, 0.05);
  CHECK(s.q[2] == m.joint_upper[2]);
  CHECK(s.qdot[2] == 0.0);
}

TEST_CASE("activations stay in bounds for extreme controls") {
  ArmModel m = default_model();
  ArmState s{};
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    std::array<double, kArmActuators> u;
    for (auto& v : u) v = rng.uniform(-2.0, 3.0);  // deliberately out of range
    s = step_dynamics(m, s, u, 0.05);
    for (double a : s.activations) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
    for (int d = 0; d < kArmDofs; ++d) {
      CHECK(s.q[d] >= m.joint_lower[d]);
      CHECK(s.q[d] <= m.joint_upper[d]);
    }
  }
}

TEST_CASE("neural effort is the mean squared control") {
  CHECK(neural_effort(std::array<double, 6>{0, 0, 0, 0, 0, 0}) == 0.0);
  CHECK(neural_effort(std::array<double, 6>{1, 1, 1, 1, 1, 1}) == 1.0);
  std::array<double, 6> u{0.5, 0.5, 0, 0, 0, 0};
  CHECK(neural_effort(u) == doctest::Approx(0.25 / 3.0).epsilon(1e-12));
}

TEST_CASE("non-finite dynamics are reported") {
  ArmModel m = default_model();
  ArmState s{};
  s.qdot[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(step_dynamics(m, s, {0, 0, 0, 0, 0, 0}, 0.05), SimulationDiverged);
}

TEST_CASE("state updates carry the fixed hmd and the FK controller pose") {
  ArmModel m = default_model();
  Arm arm(m);
  CoordinateMap to_app;
  to_app.rotation = Quat::rot_y(0.2);
  to_app.translation = {0.1, 0.0, -0.3};

  Rng rng(21);
  std::array<double, kArmActuators> u{};
  Pose first_hmd;
  for (int k = 0; k < 20; ++k) {
    for (auto& v : u) v = rng.uniform();
    arm.step(u, 0.05);
    wire::StateUpdateMsg msg = arm.make_state_update(k * 0.05, (k + 1) * 0.05, to_app);
    REQUIRE(msg.controllers.size() == 1);
    // The controller trace is exactly the mapped FK wrist pose.
    Pose expected = to_app.apply(forward_kinematics(m, arm.state().q).wrist);
    CHECK((msg.controllers[0].position - expected.position).norm() < 1e-12);
    // The virtual head never moves.
    if (k == 0) {
      first_hmd = msg.hmd;
    } else {
      CHECK(msg.hmd == first_hmd);
    }
    // Fatigue and effort ride along as reward channels.
    bool has_fatigue = false, has_effort = false;
    for (const auto& [key, value] : msg.channels) {
      if (key == "fatigue") {
        has_fatigue = true;
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
      }
      if (key == "effort") has_effort = true;
    }
    CHECK(has_fatigue);
    CHECK(has_effort);
    CHECK(msg.t_next == doctest::Approx((k + 1) * 0.05));
  }
}
