#include "whacsim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace whacsim {

void target_color(double age_fraction, uint8_t rgb[3]) {
  double t = std::clamp(age_fraction, 0.0, 1.0);
  rgb[0] = static_cast<uint8_t>(std::lround(255.0 * t));
  rgb[1] = static_cast<uint8_t>(std::lround(255.0 * (1.0 - t)));
  rgb[2] = 0;
}

wire::RgbdImage render_rgbd(const RenderScene& scene) {
  wire::RgbdImage img;
  img.width = scene.width;
  img.height = scene.height;
  size_t n = img.pixel_count();
  img.rgb.assign(n * 3, 0);
  img.depth.assign(n, std::numeric_limits<float>::infinity());

  Vec3 eye = scene.camera.position;
  Vec3 fwd = scene.camera.orientation.rotate({0.0, 0.0, 1.0});
  Vec3 right = scene.camera.orientation.rotate({1.0, 0.0, 0.0});
  Vec3 up = scene.camera.orientation.rotate({0.0, 1.0, 0.0});
  double focal = (scene.height / 2.0) / std::tan(0.5 * deg_to_rad(scene.fov_y_deg));

  Vec3 plane_origin = scene.plane.position;
  Vec3 plane_x = scene.plane.orientation.rotate({1.0, 0.0, 0.0});
  Vec3 plane_y = scene.plane.orientation.rotate({0.0, 1.0, 0.0});
  Vec3 plane_n = scene.plane.orientation.rotate({0.0, 0.0, 1.0});

  double hammer_z = 0.0;
  if (scene.hammer) {
    hammer_z = (*scene.hammer - eye).dot(fwd);
  }

  for (uint16_t py = 0; py < scene.height; ++py) {
    for (uint16_t px = 0; px < scene.width; ++px) {
      // Ray direction with unit forward component: the ray parameter is the
      // camera-z depth directly.
      double sx = (px + 0.5 - scene.width / 2.0) / focal;
      double sy = (scene.height / 2.0 - py - 0.5) / focal;
      Vec3 dir = fwd + sx * right + sy * up;

      size_t idx = static_cast<size_t>(py) * scene.width + px;
      uint8_t* pixel = &img.rgb[idx * 3];

      double denom = plane_n.dot(dir);
      if (std::abs(denom) > 1e-12) {
        double t = plane_n.dot(plane_origin - eye) / denom;
        if (t > 1e-9) {
          Vec3 point = eye + t * dir;
          Vec3 rel = point - plane_origin;
          double u = rel.dot(plane_x);
          double v = rel.dot(plane_y);
          if (std::abs(u) <= scene.plane_half_x && std::abs(v) <= scene.plane_half_y) {
            pixel[0] = pixel[1] = pixel[2] = 128;
            img.depth[idx] = static_cast<float>(t);
          }
          for (const auto& disc : scene.targets) {
            Vec3 d = point - disc.position;
            if (d.dot(d) <= disc.radius * disc.radius) {
              target_color(disc.age_fraction, pixel);
              img.depth[idx] = static_cast<float>(t);
            }
          }
        }
      }

      if (scene.hammer && hammer_z > 1e-9) {
        Vec3 point = eye + hammer_z * dir;
        Vec3 d = point - *scene.hammer;
        if (d.dot(d) <= scene.hammer_radius * scene.hammer_radius) {
          pixel[0] = 0;
          pixel[1] = 0;
          pixel[2] = 255;
          img.depth[idx] = static_cast<float>(hammer_z);
        }
      }
    }
  }
  return img;
}

}  // namespace whacsim
