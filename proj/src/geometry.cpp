#include "spatialqa/geometry.hpp"

#include <algorithm>
#include <limits>

#include "spatialqa/error.hpp"

namespace spatialqa {

Mat3 Mat3::rotation_z(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
  return t;
}

double Mat3::determinant() const {
  return dot(row(0), cross(row(1), row(2)));
}

bool Mat3::is_rotation(double tolerance) const {
  const Mat3 rtr = transposed() * (*this);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expected = r == c ? 1.0 : 0.0;
      if (!std::isfinite(rtr(r, c)) || std::abs(rtr(r, c) - expected) > tolerance) return false;
    }
  }
  return std::abs(determinant() - 1.0) <= tolerance;
}

Vec3 operator*(const Mat3& a, Vec3 v) {
  return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = dot(a.row(r), b.col(c));
  return out;
}

Quaternion Quaternion::from_axis_angle(Vec3 axis, double radians) {
  const double n = spatialqa::norm(axis);
  if (n < tol::kDirection) throw Error(ErrorCode::DegenerateDirection, "rotation axis has zero length");
  const double s = std::sin(0.5 * radians) / n;
  return Quaternion{std::cos(0.5 * radians), axis.x * s, axis.y * s, axis.z * s};
}

Quaternion Quaternion::from_rotation(const Mat3& r) {
  // Shepperd's method: pivot on the largest of w, x, y, z.
  const double trace = r(0, 0) + r(1, 1) + r(2, 2);
  Quaternion q;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return q.normalized();
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Mat3 Quaternion::to_rotation() const {
  Mat3 r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return r;
}

bool Pose::valid(double tolerance) const {
  return rotation.is_rotation(tolerance) && translation.finite();
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation.transposed();
  return Pose{rt, -(rt * translation)};
}

Vec3 world_to_camera(Vec3 p, const Pose& pose) {
  return pose.rotation.transposed() * (p - pose.translation);
}

Vec3 camera_to_world(Vec3 p, const Pose& pose) {
  return pose.rotation * p + pose.translation;
}

bool OrientedBox3::valid() const {
  return center.finite() && size.finite() && size.x > 0.0 && size.y > 0.0 && size.z > 0.0 &&
         std::abs(rotation.norm() - 1.0) <= tol::kTransform;
}

Vec3 OrientedBox3::to_local(Vec3 world) const {
  return axes().transposed() * (world - center);
}

Vec3 OrientedBox3::to_world(Vec3 local) const {
  return axes() * local + center;
}

bool OrientedBox3::contains(Vec3 p, double slack) const {
  const Vec3 local = to_local(p);
  const Vec3 h = half_extents();
  return std::abs(local.x) <= h.x + slack && std::abs(local.y) <= h.y + slack &&
         std::abs(local.z) <= h.z + slack;
}

std::array<Vec3, 8> OrientedBox3::corners() const {
  const Vec3 h = half_extents();
  const Mat3 r = axes();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z};
    out[i] = r * local + center;
  }
  return out;
}

bool Intrinsics::valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0 && width > 0 &&
         height > 0 && cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height;
}

ClosestPoint closest_point_on_box(Vec3 p, const OrientedBox3& box) {
  const Mat3 r = box.axes();
  const Vec3 h = box.half_extents();
  Vec3 local = r.transposed() * (p - box.center);
  bool inside = true;
  for (int i = 0; i < 3; ++i) {
    if (local[i] > h[i]) {
      local[i] = h[i];
      inside = false;
    } else if (local[i] < -h[i]) {
      local[i] = -h[i];
      inside = false;
    }
  }
  if (inside) return {p, 0.0};
  const Vec3 q = r * local + box.center;
  return {q, distance(p, q)};
}

bool boxes_overlap(const OrientedBox3& a, const OrientedBox3& b) {
  const Mat3 ra = a.axes();
  const Mat3 rb = b.axes();
  const Vec3 ha = a.half_extents();
  const Vec3 hb = b.half_extents();
  const Vec3 d = b.center - a.center;

  auto separated_on = [&](Vec3 axis) {
    const double len = norm(axis);
    if (len < 1e-12) return false;  // parallel edge pair; covered by face axes
    const Vec3 n = (1.0 / len) * axis;
    double ra_proj = 0.0;
    double rb_proj = 0.0;
    for (int i = 0; i < 3; ++i) {
      ra_proj += ha[i] * std::abs(dot(ra.col(i), n));
      rb_proj += hb[i] * std::abs(dot(rb.col(i), n));
    }
    return std::abs(dot(d, n)) > ra_proj + rb_proj;
  };

  for (int i = 0; i < 3; ++i) {
    if (separated_on(ra.col(i)) || separated_on(rb.col(i))) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (separated_on(cross(ra.col(i), rb.col(j)))) return false;
    }
  }
  return true;
}

namespace {

// Distance from a point moving along segment p0-p1 to a solid box is convex
// in the segment parameter, so golden-section search finds its minimum.
double segment_box_distance(Vec3 p0, Vec3 p1, const OrientedBox3& box, const BoxDistanceOptions& options) {
  const auto f = [&](double t) { return closest_point_on_box(p0 + t * (p1 - p0), box).distance; };
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < options.max_iterations && hi - lo > options.parameter_tolerance; ++it) {
    if (f1 <= f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(0.0), f(1.0)});
}

double edges_to_box(const OrientedBox3& edges_of, const OrientedBox3& box, const BoxDistanceOptions& options) {
  const auto c = edges_of.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) {
    for (int bit : {1, 2, 4}) {
      if (i & bit) continue;
      best = std::min(best, segment_box_distance(c[i], c[i | bit], box, options));
    }
  }
  return best;
}

}  // namespace

double box_box_distance(const OrientedBox3& a, const OrientedBox3& b,
                        const BoxDistanceOptions& options) {
  if (boxes_overlap(a, b)) return 0.0;
  // For disjoint convex boxes some closest pair always has one end on an edge,
  // so scanning the edges of both boxes is enough. The min over both sets
  // does not depend on argument order.
  return std::min(edges_to_box(a, b, options), edges_to_box(b, a, options));
}

double planar_signed_angle(Vec3 from_dir, Vec3 to_dir) {
  const double fx = from_dir.x, fy = from_dir.y;
  const double tx = to_dir.x, ty = to_dir.y;
  if (std::hypot(fx, fy) < tol::kDirection || std::hypot(tx, ty) < tol::kDirection) {
    throw Error(ErrorCode::DegenerateDirection, "direction has no floor-plane component");
  }
  const double angle = rad_to_deg(std::atan2(fx * ty - fy * tx, fx * tx + fy * ty));
  return angle >= 180.0 ? angle - 360.0 : angle;
}

}  // namespace spatialqa
