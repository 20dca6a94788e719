#pragma once

// Small fixed-size 3D math used throughout: vectors, unit quaternions,
// rigid poses and the coordinate-frame map applied at the bridge boundary.
// Canonical frame convention: right-handed, +x right, +y up, +z forward,
// units in meters.

#include <array>
#include <cmath>
#include <cstdint>

namespace whacsim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend Vec3 operator*(const Vec3& v, double s) { return s * v; }
  friend Vec3 operator-(const Vec3& v) { return {-v.x, -v.y, -v.z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

// Unit quaternion, (w, x, y, z) component order.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  friend bool operator==(const Quat&, const Quat&) = default;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    double n = norm();
    if (n <= 0.0) return Quat{};
    return {w / n, x / n, y / n, z / n};
  }

  Quat conjugate() const { return {w, -x, -y, -z}; }

  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }

  Vec3 rotate(const Vec3& v) const {
    // q v q* expanded via the cross-product form.
    Vec3 u{x, y, z};
    Vec3 t = 2.0 * u.cross(v);
    return v + w * t + u.cross(t);
  }

  static Quat from_axis_angle(const Vec3& axis, double angle_rad) {
    Vec3 a = axis.normalized();
    double h = 0.5 * angle_rad;
    double s = std::sin(h);
    return {std::cos(h), a.x * s, a.y * s, a.z * s};
  }

  static Quat rot_x(double angle_rad) { return from_axis_angle({1, 0, 0}, angle_rad); }
  static Quat rot_y(double angle_rad) { return from_axis_angle({0, 1, 0}, angle_rad); }
  static Quat rot_z(double angle_rad) { return from_axis_angle({0, 0, 1}, angle_rad); }

  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

// Rigid transform: orientation applied first, then translation.
struct Pose {
  Vec3 position{};
  Quat orientation{};

  friend bool operator==(const Pose&, const Pose&) = default;

  // this ∘ local: express a pose given in this frame in the parent frame.
  Pose compose(const Pose& local) const {
    return {position + orientation.rotate(local.position), orientation * local.orientation};
  }

  Vec3 transform_point(const Vec3& p) const { return position + orientation.rotate(p); }

  Pose inverse() const {
    Quat inv = orientation.conjugate();
    return {inv.rotate(-position), inv};
  }

  bool valid(double quat_tol = 1e-9) const {
    return position.finite() && orientation.finite() &&
           std::abs(orientation.norm() - 1.0) <= quat_tol;
  }
};

// Frame change between two endpoints of the bridge. The optional handedness
// flip mirrors across the x axis before the rotation is applied:
//   p' = R * (H * p) + t,  H = diag(-1, 1, 1) when flip_handedness.
struct CoordinateMap {
  Quat rotation{};
  Vec3 translation{};
  bool flip_handedness = false;

  static Vec3 mirror_x(const Vec3& v) { return {-v.x, v.y, v.z}; }

  // Conjugating a rotation by the x-mirror keeps frames orthonormal:
  // (w, x, y, z) -> (w, x, -y, -z).
  static Quat mirror_x(const Quat& q) { return {q.w, q.x, -q.y, -q.z}; }

  Vec3 apply(const Vec3& p) const {
    Vec3 h = flip_handedness ? mirror_x(p) : p;
    return rotation.rotate(h) + translation;
  }

  Pose apply(const Pose& p) const {
    Quat q = flip_handedness ? mirror_x(p.orientation) : p.orientation;
    return {apply(p.position), (rotation * q).normalized()};
  }

  CoordinateMap inverse() const {
    Quat rinv = rotation.conjugate();
    if (!flip_handedness) {
      return {rinv, rinv.rotate(-translation), false};
    }
    // p = H R^-1 (p' - t) = (H R^-1 H)(H p') - H R^-1 t
    Quat r2 = mirror_x(rinv).normalized();
    Vec3 t2 = mirror_x(rinv.rotate(-translation));
    return {r2, t2, true};
  }
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

}  // namespace whacsim
