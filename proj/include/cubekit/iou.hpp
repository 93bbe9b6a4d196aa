#ifndef CUBEKIT_IOU_HPP
#define CUBEKIT_IOU_HPP

// 2D, rotated bird's-eye-view and 3D intersection-over-union.
//
// The 3D path clips one box by the six face half-spaces of the other and
// integrates the resulting convex polytope exactly. The ground plane is the
// camera x-z plane; a footprint spans w along the object's local x and l
// along its local z, with h vertical.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cubekit/error.hpp"
#include "cubekit/geometry.hpp"

namespace cubekit {

inline constexpr double kClipEps = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Counter-clockwise convex polygon; empty or at least three vertices.
struct ConvexPolygon2D {
  std::vector<Vec2> vertices;

  bool empty() const noexcept { return vertices.size() < 3; }

  /// Shoelace area, positive for CCW input.
  double area() const noexcept {
    if (vertices.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0, n = vertices.size(); i < n; ++i) {
      const Vec2& p = vertices[i];
      const Vec2& q = vertices[(i + 1) % n];
      twice += p.x * q.y - q.x * p.y;
    }
    return twice / 2;
  }
};

/// Sutherland-Hodgman: `subject` clipped to each CCW edge of `clipper`.
inline ConvexPolygon2D clip_convex(const ConvexPolygon2D& subject,
                                   const ConvexPolygon2D& clipper) {
  if (subject.empty() || clipper.empty()) return {};
  std::vector<Vec2> poly = subject.vertices;
  const std::size_t m = clipper.vertices.size();
  for (std::size_t e = 0; e < m && !poly.empty(); ++e) {
    const Vec2& a = clipper.vertices[e];
    const Vec2& b = clipper.vertices[(e + 1) % m];
    std::vector<Vec2> next;
    next.reserve(poly.size() + 1);
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % n];
      const double sp = cross2(a, b, p);
      const double sq = cross2(a, b, q);
      const bool p_in = sp >= -kClipEps;
      const bool q_in = sq >= -kClipEps;
      if (p_in) next.push_back(p);
      if (p_in != q_in) {
        const double t = sp / (sp - sq);
        next.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    poly = std::move(next);
  }
  // drop repeated vertices produced by clipping exactly through a corner
  std::vector<Vec2> dedup;
  for (const Vec2& v : poly) {
    if (dedup.empty() || std::abs(v.x - dedup.back().x) > kClipEps ||
        std::abs(v.y - dedup.back().y) > kClipEps)
      dedup.push_back(v);
  }
  while (dedup.size() > 1 &&
         std::abs(dedup.front().x - dedup.back().x) <= kClipEps &&
         std::abs(dedup.front().y - dedup.back().y) <= kClipEps)
    dedup.pop_back();
  ConvexPolygon2D out{std::move(dedup)};
  if (out.vertices.size() < 3 || out.area() < kClipEps) return {};
  return out;
}

inline double iou_2d(const Box2D& a, const Box2D& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = iw > 0 && ih > 0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace detail {

// Total order on boxes; pairwise IoU evaluates operands in this order.
inline bool box_less(const Box3D& a, const Box3D& b) noexcept {
  const std::array<double, 9> x{a.xh, a.yh, a.z, a.w, a.h, a.l, a.r1, a.r2, a.r3};
  const std::array<double, 9> y{b.xh, b.yh, b.z, b.w, b.h, b.l, b.r1, b.r2, b.r3};
  return x < y;
}

inline double union_ratio(double inter, double va, double vb) noexcept {
  const double uni = va + vb - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

} // namespace detail

/// Yaw-rotated w x l ground-plane rectangle of a box, CCW in (x, z).
inline ConvexPolygon2D bev_footprint(const Box3D& b, const CameraIntrinsics& cam) {
  const Vec3 c = unproject_center(b.center(), cam);
  const double cs = std::cos(wrap_angle(b.r1));
  const double sn = std::sin(wrap_angle(b.r1));
  const std::array<Vec2, 4> local{Vec2{-b.w / 2, -b.l / 2}, Vec2{b.w / 2, -b.l / 2},
                                  Vec2{b.w / 2, b.l / 2}, Vec2{-b.w / 2, b.l / 2}};
  ConvexPolygon2D out;
  for (const Vec2& p : local)
    out.vertices.push_back({c[0] + cs * p.x - sn * p.y, c[2] + sn * p.x + cs * p.y});
  return out;
}

inline double bev_intersection_area(const Box3D& a, const Box3D& b,
                                    const CameraIntrinsics& cam) {
  if (detail::box_less(b, a)) return bev_intersection_area(b, a, cam);
  return clip_convex(bev_footprint(a, cam), bev_footprint(b, cam)).area();
}

/// Footprint IoU; pitch and roll are ignored.
inline double bev_iou(const Box3D& a, const Box3D& b, const CameraIntrinsics& cam) {
  if (detail::box_less(b, a)) return bev_iou(b, a, cam);
  const double inter = bev_intersection_area(a, b, cam);
  return detail::union_ratio(inter, a.w * a.l, b.w * b.l);
}

// ---------------------------------------------------------------------------
// Convex polytope clipping

namespace detail {

using Face = std::vector<Vec3>;

struct Polytope {
  std::vector<Face> faces;
};

inline Polytope box_polytope(const std::array<Vec3, 8>& c) {
  static constexpr std::array<std::array<int, 4>, 6> kFaces{{{0, 2, 6, 4},
                                                             {1, 3, 7, 5},
                                                             {0, 1, 5, 4},
                                                             {2, 3, 7, 6},
                                                             {0, 1, 3, 2},
                                                             {4, 5, 7, 6}}};
  Polytope p;
  for (const auto& f : kFaces) p.faces.push_back({c[f[0]], c[f[1]], c[f[2]], c[f[3]]});
  return p;
}

/// Orders coplanar points cyclically around their centroid.
inline Face order_cap(std::vector<Vec3> pts, const Vec3& normal) {
  Face uniq;
  for (const Vec3& p : pts) {
    bool dup = false;
    for (const Vec3& q : uniq) {
      const Vec3 d = p - q;
      if (dot(d, d) <= 1e-20) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(p);
  }
  if (uniq.size() < 3) return {};
  Vec3 centroid{0, 0, 0};
  for (const Vec3& p : uniq) centroid = centroid + p;
  centroid = (1.0 / static_cast<double>(uniq.size())) * centroid;
  Vec3 u = uniq[0] - centroid;
  const double un = std::sqrt(dot(u, u));
  if (un == 0) return {};
  u = (1.0 / un) * u;
  const Vec3 v = cross(normal, u);
  std::vector<std::pair<double, Vec3>> keyed;
  keyed.reserve(uniq.size());
  for (const Vec3& p : uniq) {
    const Vec3 d = p - centroid;
    keyed.emplace_back(std::atan2(dot(d, v), dot(d, u)), p);
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  Face out;
  for (auto& [angle, p] : keyed) out.push_back(p);
  return out;
}

/// Keeps the part of `poly` with dot(normal, p) <= offset.
inline Polytope clip_halfspace(const Polytope& poly, const Vec3& normal, double offset) {
  bool cuts = false;
  for (const Face& face : poly.faces)
    for (const Vec3& p : face) cuts = cuts || dot(normal, p) - offset > kClipEps;
  if (!cuts) return poly;
  Polytope out;
  std::vector<Vec3> cap;
  for (const Face& face : poly.faces) {
    Face next;
    const std::size_t n = face.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = face[i];
      const Vec3& q = face[(i + 1) % n];
      const double dp = dot(normal, p) - offset;
      const double dq = dot(normal, q) - offset;
      const bool p_in = dp <= kClipEps;
      const bool q_in = dq <= kClipEps;
      if (p_in) {
        next.push_back(p);
        if (std::abs(dp) <= kClipEps) cap.push_back(p);
      }
      if (p_in != q_in) {
        const double t = dp / (dp - dq);
        const Vec3 x = p + t * (q - p);
        next.push_back(x);
        cap.push_back(x);
      }
    }
    if (next.size() >= 3) out.faces.push_back(std::move(next));
  }
  if (out.faces.empty()) return out;
  Face capped = order_cap(std::move(cap), normal);
  if (capped.size() >= 3) out.faces.push_back(std::move(capped));
  return out;
}

/// Volume of a convex polytope by fanning every face to an interior point.
inline double polytope_volume(const Polytope& poly) {
  Vec3 centroid{0, 0, 0};
  std::size_t count = 0;
  for (const Face& f : poly.faces)
    for (const Vec3& p : f) {
      centroid = centroid + p;
      ++count;
    }
  if (count == 0) return 0.0;
  centroid = (1.0 / static_cast<double>(count)) * centroid;
  double vol = 0.0;
  for (const Face& f : poly.faces) {
    double face_vol = 0.0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      const Vec3 a = f[0] - centroid;
      const Vec3 b = f[i] - centroid;
      const Vec3 c = f[i + 1] - centroid;
      face_vol += dot(a, cross(b, c));
    }
    vol += std::abs(face_vol) / 6.0;
  }
  return vol;
}

inline void require_volume(const Box3D& b) {
  if (!(b.w > 0 && b.h > 0 && b.l > 0))
    throw DomainError("iou_3d: degenerate box with zero volume");
}

} // namespace detail

/// Exact intersection volume by half-space clipping, any orientation.
inline double intersection_volume_polytope(const Box3D& a, const Box3D& b,
                                           const CameraIntrinsics& cam) {
  if (detail::box_less(b, a)) return intersection_volume_polytope(b, a, cam);
  detail::Polytope poly = detail::box_polytope(box_corners(a, cam));
  const Vec3 center = unproject_center(b.center(), cam);
  const Mat3 r = rotation_matrix(b);
  const std::array<double, 3> half{b.w / 2, b.h / 2, b.l / 2};
  for (int axis = 0; axis < 3 && !poly.faces.empty(); ++axis) {
    const Vec3 dir{r[0][axis], r[1][axis], r[2][axis]};
    for (double sign : {1.0, -1.0}) {
      const Vec3 n = sign * dir;
      poly = detail::clip_halfspace(poly, n, dot(n, center) + half[axis]);
      if (poly.faces.empty()) break;
    }
  }
  return detail::polytope_volume(poly);
}

inline double iou_3d_polytope(const Box3D& a, const Box3D& b,
                              const CameraIntrinsics& cam) {
  detail::require_volume(a);
  detail::require_volume(b);
  if (detail::box_less(b, a)) return iou_3d_polytope(b, a, cam);
  const double inter = intersection_volume_polytope(a, b, cam);
  return detail::union_ratio(inter, a.w * a.h * a.l, b.w * b.h * b.l);
}

/// Footprint overlap times vertical overlap; valid only without pitch/roll.
inline double iou_3d_yaw_only(const Box3D& a, const Box3D& b,
                              const CameraIntrinsics& cam) {
  detail::require_volume(a);
  detail::require_volume(b);
  if (detail::box_less(b, a)) return iou_3d_yaw_only(b, a, cam);
  const double ya = unproject_center(a.center(), cam)[1];
  const double yb = unproject_center(b.center(), cam)[1];
  const double overlap = std::min(ya + a.h / 2, yb + b.h / 2) -
                         std::max(ya - a.h / 2, yb - b.h / 2);
  if (!(overlap > 0)) return 0.0;
  const double inter = bev_intersection_area(a, b, cam) * overlap;
  return detail::union_ratio(inter, a.w * a.h * a.l, b.w * b.h * b.l);
}

inline bool yaw_only(const Box3D& b) noexcept {
  return wrap_angle(b.r2) == 0.0 && wrap_angle(b.r3) == 0.0;
}

inline double iou_3d(const Box3D& a, const Box3D& b, const CameraIntrinsics& cam) {
  if (yaw_only(a) && yaw_only(b)) return iou_3d_yaw_only(a, b, cam);
  return iou_3d_polytope(a, b, cam);
}

/// Inside test in the box's local frame.
inline bool box_contains(const Vec3& center, const Mat3& rot, const Box3D& b,
                         const Vec3& p) noexcept {
  const Vec3 local = apply_transposed(rot, p - center);
  return std::abs(local[0]) <= b.w / 2 && std::abs(local[1]) <= b.h / 2 &&
         std::abs(local[2]) <= b.l / 2;
}

/// Rejection-sampling estimate over the axis-aligned bounds of both boxes.
/// Test oracle only; deterministic for a given seed.
inline double monte_carlo_iou_3d(const Box3D& a, const Box3D& b,
                                 const CameraIntrinsics& cam, std::size_t samples,
                                 std::uint64_t seed) {
  if (samples == 0) throw DomainError("monte_carlo_iou_3d: samples must be >= 1");
  const auto ca = box_corners(a, cam);
  const auto cb = box_corners(b, cam);
  Vec3 lo = ca[0], hi = ca[0];
  for (const auto* set : {&ca, &cb})
    for (const Vec3& p : *set)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
  const Vec3 center_a = unproject_center(a.center(), cam);
  const Vec3 center_b = unproject_center(b.center(), cam);
  const Mat3 rot_a = rotation_matrix(a);
  const Mat3 rot_b = rotation_matrix(b);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 p{lo[0] + unit(rng) * (hi[0] - lo[0]), lo[1] + unit(rng) * (hi[1] - lo[1]),
                 lo[2] + unit(rng) * (hi[2] - lo[2])};
    const bool in_a = box_contains(center_a, rot_a, a, p);
    const bool in_b = box_contains(center_b, rot_b, b, p);
    both += in_a && in_b;
    either += in_a || in_b;
  }
  if (either == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

} // namespace cubekit

#endif // CUBEKIT_IOU_HPP
