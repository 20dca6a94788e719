#include "whacsim/envelope.hpp"

#include <algorithm>
#include <cmath>

namespace whacsim {

const char* reach_name(Reach r) {
  switch (r) {
    case Reach::kReachable: return "reachable";
    case Reach::kUnreachable: return "unreachable";
    case Reach::kBoundary: return "boundary";
  }
  return "?";
}

EnvelopeCloud reach_envelope(const ArmModel& model, int resolution, const CoordinateMap& to_app,
                             bool with_controller) {
  if (resolution < 2) throw ConfigError("envelope resolution must be at least 2 per DOF");
  EnvelopeCloud cloud;
  cloud.resolution = resolution;
  cloud.with_controller = with_controller;
  cloud.shoulder = model.shoulder_origin;
  cloud.elev_lo = model.joint_lower[0];
  cloud.elev_hi = model.joint_upper[0];
  cloud.azim_lo = model.joint_lower[1];
  cloud.azim_hi = model.joint_upper[1];
  cloud.to_app = to_app;
  cloud.points.reserve(static_cast<size_t>(resolution) * resolution);

  double elbow = model.joint_lower[2];  // full extension
  double radius = 0.0;
  for (int i = 0; i < resolution; ++i) {
    double elev = cloud.elev_lo + (cloud.elev_hi - cloud.elev_lo) * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      double azim = cloud.azim_lo + (cloud.azim_hi - cloud.azim_lo) * j / (resolution - 1);
      FkResult fk = forward_kinematics(model, {elev, azim, elbow});
      Vec3 p = with_controller ? fk.hammer_tip.position : fk.wrist.position;
      radius = std::max(radius, (p - model.shoulder_origin).norm());
      cloud.points.push_back(to_app.apply(p));
    }
  }
  cloud.radius = radius;
  return cloud;
}

namespace {

bool angle_in(double v, double lo, double hi, double tol) {
  return v >= lo - tol && v <= hi + tol;
}

double wrap_pi(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

// Arm direction for (elevation, azimuth):
//   d = (sin(azim)*sin(elev), -cos(elev), cos(azim)*sin(elev)).
// A unit direction u inverts to (theta, psi) with theta = acos(-u.y) >= 0,
// psi = atan2(u.x, u.z); the mirrored pair (-theta, psi + pi) reaches the
// same direction through negative elevation.
bool direction_in_cone(const Vec3& u, const EnvelopeCloud& c, double ang_tol) {
  double theta = std::acos(std::clamp(-u.y, -1.0, 1.0));
  double psi = std::atan2(u.x, u.z);
  if (angle_in(theta, c.elev_lo, c.elev_hi, ang_tol) &&
      angle_in(psi, c.azim_lo, c.azim_hi, ang_tol)) {
    return true;
  }
  double psi2 = wrap_pi(psi + kPi);
  return angle_in(-theta, c.elev_lo, c.elev_hi, ang_tol) &&
         angle_in(psi2, c.azim_lo, c.azim_hi, ang_tol);
}

}  // namespace

std::vector<Reach> check_targets(const EnvelopeCloud& cloud, std::span<const Vec3> targets,
                                 double tolerance) {
  if (cloud.points.empty()) throw ConfigError("empty envelope cloud");
  CoordinateMap from_app = cloud.to_app.inverse();
  double ang_tol = tolerance / std::max(cloud.radius, 1e-9);

  std::vector<Reach> out;
  out.reserve(targets.size());
  for (const Vec3& target : targets) {
    Vec3 rel = from_app.apply(target) - cloud.shoulder;
    double r = rel.norm();
    if (r <= std::max(tolerance, 1e-12)) {
      out.push_back(Reach::kReachable);
      continue;
    }
    Vec3 u = rel.normalized();
    if (!direction_in_cone(u, cloud, ang_tol)) {
      out.push_back(Reach::kUnreachable);
      continue;
    }
    if (std::abs(r - cloud.radius) <= tolerance) {
      out.push_back(Reach::kBoundary);
    } else if (r < cloud.radius) {
      out.push_back(Reach::kReachable);
    } else {
      out.push_back(Reach::kUnreachable);
    }
  }
  return out;
}

std::vector<Vec3> whac_target_positions(const Pose& hmd_anchor, double grid_spacing) {
  std::vector<Vec3> out;
  out.reserve(27);
  for (Placement p : {Placement::kLow, Placement::kMid, Placement::kHigh}) {
    Pose plane = PlacementFrame::preset(p).pose(hmd_anchor);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        Vec3 local{(col - 1) * grid_spacing, (1 - row) * grid_spacing, 0.0};
        out.push_back(plane.transform_point(local));
      }
    }
  }
  return out;
}

}  // namespace whacsim
