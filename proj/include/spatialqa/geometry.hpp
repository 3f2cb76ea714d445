#pragma once

#include <array>
#include <cmath>

namespace spatialqa {

// Conventions used everywhere in this library:
//   world  : Z-up, meters
//   camera : +X right, +Y down, +Z forward
inline constexpr const char* kWorldConvention = "world: Z-up, meters";
inline constexpr const char* kCameraConvention = "camera: +X right, +Y down, +Z forward";

namespace tol {
inline constexpr double kTransform = 1e-9;
inline constexpr double kSamplingOracle = 2e-2;
inline constexpr double kDirection = 1e-9;
}  // namespace tol

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return Mat3{}; }
  static Mat3 rotation_z(double radians);

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 row(int r) const { return {m[r * 3], m[r * 3 + 1], m[r * 3 + 2]}; }
  Vec3 col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }

  Mat3 transposed() const;
  double determinant() const;
  bool is_rotation(double tolerance = tol::kTransform) const;

  friend Vec3 operator*(const Mat3& a, Vec3 v);
  friend Mat3 operator*(const Mat3& a, const Mat3& b);
  friend bool operator==(const Mat3&, const Mat3&) = default;
};

// Unit quaternion stored as (w, x, y, z).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion from_axis_angle(Vec3 axis, double radians);
  static Quaternion from_rotation(const Mat3& r);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion normalized() const;
  Mat3 to_rotation() const;

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

// Camera-to-world rigid transform: p_world = rotation * p_cam + translation.
struct Pose {
  Mat3 rotation;
  Vec3 translation;

  bool valid(double tolerance = tol::kTransform) const;
  Pose inverse() const;

  friend bool operator==(const Pose&, const Pose&) = default;
};

Vec3 world_to_camera(Vec3 p, const Pose& pose);
Vec3 camera_to_world(Vec3 p, const Pose& pose);

struct OrientedBox3 {
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};  // full extents
  Quaternion rotation;       // box-to-world

  bool valid() const;
  Vec3 half_extents() const { return 0.5 * size; }
  Mat3 axes() const { return rotation.to_rotation(); }  // columns are box axes in world

  Vec3 to_local(Vec3 world) const;
  Vec3 to_world(Vec3 local) const;
  bool contains(Vec3 p, double slack = 0.0) const;
  std::array<Vec3, 8> corners() const;

  friend bool operator==(const OrientedBox3&, const OrientedBox3&) = default;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool valid() const;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

struct ClosestPoint {
  Vec3 point;
  double distance = 0.0;
};

ClosestPoint closest_point_on_box(Vec3 p, const OrientedBox3& box);

// Separating-axis test on the 15 candidate axes; touching counts as overlap.
bool boxes_overlap(const OrientedBox3& a, const OrientedBox3& b);

struct BoxDistanceOptions {
  double parameter_tolerance = 1e-12;  // golden-section bracket width along an edge
  int max_iterations = 100;
};

// Minimum distance between the two solid boxes (0 when they intersect).
// Symmetric in its arguments bit-for-bit.
double box_box_distance(const OrientedBox3& a, const OrientedBox3& b,
                        const BoxDistanceOptions& options = {});

// Counter-clockwise angle viewed from +Z between the floor projections of
// the two directions, in degrees within [-180, 180).
double planar_signed_angle(Vec3 from_dir, Vec3 to_dir);

inline constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace spatialqa
