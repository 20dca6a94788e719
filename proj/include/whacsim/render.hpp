#pragma once

// Flat-shaded RGB-D rasterizer: pinhole camera, painter's-order compositing
// of the grey target-area quad, the target discs (green fading to red over
// their lifespan) and the blue hammer-head disc billboarded toward the
// camera. Depth is linear camera-z in meters, +inf where no surface.

#include <optional>
#include <vector>

#include "whacsim/geom.hpp"
#include "whacsim/wire.hpp"

namespace whacsim {

struct RenderScene {
  Pose camera{};  // looks along its local +z
  double fov_y_deg = 90.0;
  uint16_t width = 120;
  uint16_t height = 80;

  Pose plane{};  // quad spans local x-y
  double plane_half_x = 0.22;
  double plane_half_y = 0.22;

  struct TargetDisc {
    Vec3 position{};
    double radius = 0.025;
    double age_fraction = 0.0;  // 0 = fresh green, 1 = expired red
  };
  std::vector<TargetDisc> targets;

  std::optional<Vec3> hammer;  // absent e.g. before the first state update
  double hammer_radius = 0.03;
};

wire::RgbdImage render_rgbd(const RenderScene& scene);

// Color of a target at the given age fraction; linear blend green -> red,
// rounded half away from zero.
void target_color(double age_fraction, uint8_t rgb[3]);

}  // namespace whacsim
