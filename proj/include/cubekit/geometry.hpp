#ifndef CUBEKIT_GEOMETRY_HPP
#define CUBEKIT_GEOMETRY_HPP

// Pinhole camera, box parameterizations and the virtual-camera transform.
//
// Camera frame: +x right, +y down, +z forward. A box is stored by the image
// projection of its center (xh, yh) plus depth z, metric size (w, h, l) and
// Euler angles (yaw, pitch, roll). w spans the object's local x axis, h its
// local y (vertical) axis and l its local z axis. Yaw turns about the up
// axis (-y), pitch about +x, roll about +z, composed R = R_yaw R_pitch R_roll.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cubekit/error.hpp"

namespace cubekit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct CameraIntrinsics {
  double fx = 512.0;
  double fy = 512.0;
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool valid() const noexcept {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
           cx <= width && cy >= 0 && cy <= height && std::isfinite(fx) &&
           std::isfinite(fy) && std::isfinite(width) && std::isfinite(height);
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct Point2D {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2D&, const Point2D&) = default;
};

struct Box2D {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool valid() const noexcept { return x1 <= x2 && y1 <= y2; }
  double area() const noexcept { return (x2 - x1) * (y2 - y1); }
  Point2D center() const noexcept { return {(x1 + x2) / 2, (y1 + y2) / 2}; }
  friend bool operator==(const Box2D&, const Box2D&) = default;
};

struct Point3D {
  double xh = 0.0;
  double yh = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3D&, const Point3D&) = default;
};

/// Projected-center box. Field order is the serialization order.
struct Box3D {
  double xh = 0.0;
  double yh = 0.0;
  double z = 0.0;
  double w = 0.0;
  double h = 0.0;
  double l = 0.0;
  double r1 = 0.0; // yaw
  double r2 = 0.0; // pitch
  double r3 = 0.0; // roll

  Point3D center() const noexcept { return {xh, yh, z}; }
  bool valid() const noexcept {
    return w > 0 && h > 0 && l > 0 && z > 0 && std::isfinite(xh) &&
           std::isfinite(yh) && std::isfinite(z) && std::isfinite(w) &&
           std::isfinite(h) && std::isfinite(l);
  }
  friend bool operator==(const Box3D&, const Box3D&) = default;
};

/// Maps any finite angle into [0, 2pi).
inline double wrap_angle(double a) noexcept {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  // fmod of a tiny negative can round up to exactly 2pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) noexcept {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) noexcept {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) noexcept {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Vec3 apply(const Mat3& m, const Vec3& v) noexcept {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

/// R^T v
inline Vec3 apply_transposed(const Mat3& m, const Vec3& v) noexcept {
  return {m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
          m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
          m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2]};
}

inline double determinant(const Mat3& m) noexcept {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 rotation_matrix(double yaw, double pitch, double roll) noexcept {
  yaw = wrap_angle(yaw);
  pitch = wrap_angle(pitch);
  roll = wrap_angle(roll);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  // about -y
  const Mat3 r_yaw{{{cy, 0, -sy}, {0, 1, 0}, {sy, 0, cy}}};
  const Mat3 r_pitch{{{1, 0, 0}, {0, cp, -sp}, {0, sp, cp}}};
  const Mat3 r_roll{{{cr, -sr, 0}, {sr, cr, 0}, {0, 0, 1}}};
  return matmul(matmul(r_yaw, r_pitch), r_roll);
}

inline Mat3 rotation_matrix(const Box3D& b) noexcept {
  return rotation_matrix(b.r1, b.r2, b.r3);
}

inline Vec3 unproject_center(const Point3D& p, const CameraIntrinsics& cam) {
  if (!(p.z > 0)) throw DomainError("unproject_center: depth must be positive");
  return {(p.xh - cam.cx) / cam.fx * p.z, (p.yh - cam.cy) / cam.fy * p.z, p.z};
}

inline Point2D project_point(const Vec3& q, const CameraIntrinsics& cam) {
  if (!(q[2] > 0)) throw BehindCameraError("project_point: point behind camera");
  return {cam.fx * q[0] / q[2] + cam.cx, cam.fy * q[1] / q[2] + cam.cy};
}

/// Inverse of unproject_center: the projected-center form of a metric point.
inline Point3D to_projected(const Vec3& q, const CameraIntrinsics& cam) {
  const Point2D p = project_point(q, cam);
  return {p.x, p.y, q[2]};
}

/// Corner i has local signs (bit0 -> x, bit1 -> y, bit2 -> z), 0 meaning -1.
inline std::array<Vec3, 8> box_corners(const Box3D& b,
                                       const CameraIntrinsics& cam) {
  const Vec3 c = unproject_center(b.center(), cam);
  const Mat3 r = rotation_matrix(b);
  std::array<Vec3, 8> out{};
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{(i & 1 ? 0.5 : -0.5) * b.w, (i & 2 ? 0.5 : -0.5) * b.h,
                     (i & 4 ? 0.5 : -0.5) * b.l};
    out[i] = c + apply(r, local);
  }
  return out;
}

inline Box2D project_box3d_to_box2d(const Box3D& b, const CameraIntrinsics& cam,
                                    bool clip) {
  const auto corners = box_corners(b, cam);
  Box2D out{std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
  for (const auto& q : corners) {
    if (!(q[2] > 0))
      throw BehindCameraError("project_box3d_to_box2d: corner behind camera");
    const Point2D p = project_point(q, cam);
    out.x1 = std::min(out.x1, p.x);
    out.y1 = std::min(out.y1, p.y);
    out.x2 = std::max(out.x2, p.x);
    out.y2 = std::max(out.y2, p.y);
  }
  if (clip) {
    out.x1 = std::clamp(out.x1, 0.0, cam.width);
    out.x2 = std::clamp(out.x2, 0.0, cam.width);
    out.y1 = std::clamp(out.y1, 0.0, cam.height);
    out.y2 = std::clamp(out.y2, 0.0, cam.height);
  }
  return out;
}

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Intrinsics of the virtual camera for a source camera resized to `target`.
inline CameraIntrinsics virtual_intrinsics(const CameraIntrinsics& cam,
                                           double f_virtual, ImageSize target) {
  if (!(target.width > 0) || !(target.height > 0) || !(cam.width > 0) ||
      !(cam.height > 0))
    throw DomainError("virtual camera: degenerate image size");
  if (!(f_virtual > 0)) throw DomainError("virtual camera: focal must be positive");
  const double sx = target.width / cam.width;
  const double sy = target.height / cam.height;
  return {f_virtual, f_virtual, cam.cx * sx, cam.cy * sy, target.width,
          target.height};
}

struct VirtualBox {
  Box3D box;
  CameraIntrinsics intrinsics;
};

/// Rescales the projected center with the image resize and moves depth so the
/// object keeps its apparent size under a camera of focal `f_virtual`:
/// z' = z * f_virtual / (fy * target.height / cam.height).
inline VirtualBox to_virtual_camera(const Box3D& b, const CameraIntrinsics& cam,
                                    double f_virtual, ImageSize target) {
  const CameraIntrinsics virt = virtual_intrinsics(cam, f_virtual, target);
  const double sx = target.width / cam.width;
  const double sy = target.height / cam.height;
  const double f_eff = cam.fy * sy;
  Box3D out = b;
  out.xh = b.xh * sx;
  out.yh = b.yh * sy;
  out.z = f_eff == f_virtual ? b.z : b.z * f_virtual / f_eff;
  return {out, virt};
}

inline Point2D flip(const Point2D& p, double width) noexcept {
  return {width - p.x, p.y};
}

inline Box2D flip(const Box2D& b, double width) noexcept {
  return {width - b.x2, b.y1, width - b.x1, b.y2};
}

/// Mirror about the vertical image axis. Yaw and roll change sign, pitch
/// is mirror-invariant.
inline Box3D flip(const Box3D& b, double width) noexcept {
  Box3D out = b;
  out.xh = width - b.xh;
  out.r1 = wrap_angle(kTwoPi - b.r1);
  out.r3 = wrap_angle(kTwoPi - b.r3);
  return out;
}

inline CameraIntrinsics flip(const CameraIntrinsics& cam) noexcept {
  CameraIntrinsics out = cam;
  out.cx = cam.width - cam.cx;
  return out;
}

} // namespace cubekit

#endif // CUBEKIT_GEOMETRY_HPP
