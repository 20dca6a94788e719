#pragma once

// Reach analysis: the full-extension envelope of the arm (a spherical shell
// sector swept by the shoulder DOFs with the elbow straight) and target
// classification against it.

#include <span>
#include <vector>

#include "whacsim/arm.hpp"
#include "whacsim/game.hpp"
#include "whacsim/geom.hpp"

namespace whacsim {

struct EnvelopeCloud {
  std::vector<Vec3> points;  // mapped to the application frame
  int resolution = 0;
  bool with_controller = false;
  // Generation metadata (arm frame) used for membership tests.
  Vec3 shoulder{};
  double radius = 0.0;
  double elev_lo = 0.0, elev_hi = 0.0;
  double azim_lo = 0.0, azim_hi = 0.0;
  CoordinateMap to_app{};
};

// Samples the shoulder DOFs on a resolution x resolution grid over their
// limits with the elbow at full extension; with_controller extends the tip
// by the hammer offset.
EnvelopeCloud reach_envelope(const ArmModel& model, int resolution, const CoordinateMap& to_app,
                             bool with_controller);

enum class Reach { kReachable, kUnreachable, kBoundary };

const char* reach_name(Reach r);

// Shell-sector membership: reachable iff the target (mapped back to the arm
// frame) lies within the sampled solid angle and inside the shell radius;
// boundary within +-tolerance of the shell. Tolerance is in meters.
std::vector<Reach> check_targets(const EnvelopeCloud& cloud, std::span<const Vec3> targets,
                                 double tolerance);

// The 27 game target positions: 9 grid cells for each of the three
// placements, anchored at the given HMD pose.
std::vector<Vec3> whac_target_positions(const Pose& hmd_anchor, double grid_spacing = 0.125);

}  // namespace whacsim
