#include <doctest.h>

#include <cmath>

#include "whacsim/envelope.hpp"
#include "whacsim/rng.hpp"

using namespace whacsim;

TEST_CASE("bare-hand envelope points sit exactly on the full-extension shell") {
  ArmModel m;
  EnvelopeCloud cloud = reach_envelope(m, 30, CoordinateMap{}, false);
  double expected = m.upper_arm_length + m.forearm_length;
  for (const Vec3& p : cloud.points) {
    CHECK(std::abs((p - m.shoulder_origin).norm() - expected) < 1e-9);
  }
  CHECK(cloud.radius == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("controller-equipped envelope extends by the hammer offset") {
  ArmModel m;
  EnvelopeCloud cloud = reach_envelope(m, 30, CoordinateMap{}, true);
  double expected =
      m.upper_arm_length + m.forearm_length + m.hammer_offset.position.norm();
  for (const Vec3& p : cloud.points) {
    CHECK(std::abs((p - m.shoulder_origin).norm() - expected) < 1e-9);
  }
}

TEST_CASE("shoulder origin is inside the shell; far targets are not") {
  ArmModel m;
  EnvelopeCloud cloud = reach_envelope(m, 50, CoordinateMap{}, true);
  Vec3 targets[2] = {m.shoulder_origin,
                     m.shoulder_origin + Vec3{0, 0, cloud.radius + 1.0}};
  auto res = check_targets(cloud, targets, 0.01);
  CHECK(res[0] == Reach::kReachable);
  CHECK(res[1] == Reach::kUnreachable);
}

TEST_CASE("boundary band flags targets within tolerance of the shell") {
  ArmModel m;
  EnvelopeCloud cloud = reach_envelope(m, 50, CoordinateMap{}, false);
  // Straight ahead at full extension (within the joint cone).
  Vec3 dir{0.0, -0.2, 0.98};
  dir = dir.normalized();
  Vec3 on_shell = m.shoulder_origin + cloud.radius * dir;
  Vec3 just_inside = m.shoulder_origin + (cloud.radius - 0.05) * dir;
  Vec3 targets[2] = {on_shell, just_inside};
  auto res = check_targets(cloud, targets, 0.01);
  CHECK(res[0] == Reach::kBoundary);
  CHECK(res[1] == Reach::kReachable);
}

TEST_CASE("all 27 game target positions are reachable with the controller") {
  ArmModel m;
  EnvelopeCloud cloud = reach_envelope(m, 100, CoordinateMap{}, true);
  std::vector<Vec3> targets = whac_target_positions(m.hmd_pose);
  REQUIRE(targets.size() == 27);
  auto res = check_targets(cloud, targets, 0.02);
  for (size_t i = 0; i < res.size(); ++i) {
    INFO("target ", i, " at (", targets[i].x, ", ", targets[i].y, ", ", targets[i].z, ")");
    CHECK(res[i] == Reach::kReachable);
  }
}

TEST_CASE("coarse clouds are subsets of nested finer clouds") {
  ArmModel m;
  EnvelopeCloud coarse = reach_envelope(m, 10, CoordinateMap{}, false);
  EnvelopeCloud fine = reach_envelope(m, 100, CoordinateMap{}, false);
  // Grid fractions i/9 coincide with 11i/99, so every coarse point appears
  // in the fine cloud up to rounding.
  for (const Vec3& p : coarse.points) {
    double best = 1e9;
    for (const Vec3& q : fine.points) best = std::min(best, (p - q).norm());
    CHECK(best < 1e-9);
  }
}

TEST_CASE("classification agrees with a 10x finer brute-force FK oracle") {
  ArmModel m;
  const int coarse_res = 20;
  const int fine_res = 200;
  EnvelopeCloud cloud = reach_envelope(m, coarse_res, CoordinateMap{}, true);
  const double tol = 0.02;

  // Oracle: direction membership by nearest fine-grid FK sample, radius by
  // direct comparison, on points generated independently of check_targets.
  std::vector<Vec3> fine_dirs;
  double elbow = m.joint_lower[2];
  for (int i = 0; i < fine_res; ++i) {
    double elev = m.joint_lower[0] + (m.joint_upper[0] - m.joint_lower[0]) * i / (fine_res - 1);
    for (int j = 0; j < fine_res; ++j) {
      double azim = m.joint_lower[1] + (m.joint_upper[1] - m.joint_lower[1]) * j / (fine_res - 1);
      FkResult fk = forward_kinematics(m, {elev, azim, elbow});
      fine_dirs.push_back((fk.hammer_tip.position - m.shoulder_origin).normalized());
    }
  }
  double fine_step = std::max(m.joint_upper[0] - m.joint_lower[0],
                              m.joint_upper[1] - m.joint_lower[1]) /
                     (fine_res - 1);

  Rng rng(2718);
  int outside_band = 0;
  int agree = 0;
  for (int t = 0; t < 400; ++t) {
    Vec3 target = m.shoulder_origin + Vec3{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9),
                                           rng.uniform(-0.9, 0.9)};
    double r = (target - m.shoulder_origin).norm();
    if (std::abs(r - cloud.radius) <= tol || r < 1e-6) continue;  // skip the band
    ++outside_band;
    Vec3 u = (target - m.shoulder_origin).normalized();
    double best = 1e9;
    for (const Vec3& d : fine_dirs) {
      best = std::min(best, std::acos(std::clamp(u.dot(d), -1.0, 1.0)));
    }
    bool oracle_reachable = best <= 2.0 * fine_step && r < cloud.radius;
    Reach got = check_targets(cloud, std::span(&target, 1), tol)[0];
    bool impl_reachable = got == Reach::kReachable;
    if (impl_reachable == oracle_reachable) ++agree;
  }
  REQUIRE(outside_band > 200);
  CHECK(static_cast<double>(agree) / outside_band >= 0.99);
}

TEST_CASE("coordinate map carries the cloud into the app frame and back") {
  ArmModel m;
  CoordinateMap map;
  map.rotation = Quat::rot_y(0.3);
  map.translation = {0.5, -0.1, 0.2};
  EnvelopeCloud mapped = reach_envelope(m, 20, map, true);
  EnvelopeCloud plain = reach_envelope(m, 20, CoordinateMap{}, true);
  CoordinateMap inv = map.inverse();
  for (size_t i = 0; i < mapped.points.size(); ++i) {
    CHECK((inv.apply(mapped.points[i]) - plain.points[i]).norm() < 1e-12);
  }
  // Classification is frame-independent.
  std::vector<Vec3> targets = whac_target_positions(m.hmd_pose);
  std::vector<Vec3> mapped_targets;
  for (const Vec3& t : targets) mapped_targets.push_back(map.apply(t));
  auto res_plain = check_targets(plain, targets, 0.02);
  auto res_mapped = check_targets(mapped, mapped_targets, 0.02);
  CHECK(res_plain == res_mapped);
}

TEST_CASE("resolution below two is rejected and empty targets are fine") {
  ArmModel m;
  CHECK_THROWS(reach_envelope(m, 1, CoordinateMap{}, false));
  EnvelopeCloud cloud = reach_envelope(m, 5, CoordinateMap{}, false);
  auto res = check_targets(cloud, std::span<const Vec3>{}, 0.01);
  CHECK(res.empty());
}

TEST_CASE("unlimited shoulder limits sweep a full sphere shell") {
  ArmModel m;
  m.joint_lower = {0.0, -kPi, 0.0};
  m.joint_upper = {kPi, kPi, 2.6};
  EnvelopeCloud cloud = reach_envelope(m, 100, CoordinateMap{}, false);

  // Solid-angle binning oracle: 18 polar x 36 azimuthal bins; every bin
  // with nonzero area must contain at least one cloud direction.
  const int n_polar = 18, n_azim = 36;
  std::vector<int> bins(n_polar * n_azim, 0);
  for (const Vec3& p : cloud.points) {
    Vec3 u = (p - m.shoulder_origin).normalized();
    double polar = std::acos(std::clamp(u.y, -1.0, 1.0));  // from +y
    double azim = std::atan2(u.x, u.z);                    // [-pi, pi]
    int bp = std::min(n_polar - 1, static_cast<int>(polar / kPi * n_polar));
    int ba = std::min(n_azim - 1, static_cast<int>((azim + kPi) / (2 * kPi) * n_azim));
    bins[bp * n_azim + ba] += 1;
  }
  int covered = 0;
  for (int b = 0; b < n_polar * n_azim; ++b) covered += bins[b] > 0 ? 1 : 0;
  double coverage = static_cast<double>(covered) / (n_polar * n_azim);
  CHECK(coverage > 0.99);
}
