#pragma once

// Point/box types in the LiDAR sensor frame (x forward, y left, z up) and
// the polar direction/rotation/binning math used by the grouping database.

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"

namespace lcfuse {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct DegenerateCenter : DataError {
  using DataError::DataError;
};

struct Point3 {
  Eigen::Vector3d xyz{0.0, 0.0, 0.0};
  double intensity = 0.0;

  Point3() = default;
  Point3(double x, double y, double z, double i = 0.0) : xyz(x, y, z), intensity(i) {}
  Point3(const Eigen::Vector3d& p, double i) : xyz(p), intensity(i) {}
};

// Oriented box. dims = (length, width, height); length runs along +x of the
// object frame at yaw 0, yaw rotates counter-clockwise about z.
struct Box3D {
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d dims{1.0, 1.0, 1.0};
  double yaw = 0.0;
  std::string class_label;
};

// Per-class box prior: mean dims drive both synthetic shape sampling and the
// class assignment of decoded detections.
struct ClassSpec {
  std::string name;
  Eigen::Vector3d dims_mean{1.0, 1.0, 1.0};
  Eigen::Vector3d dims_sd{0.0, 0.0, 0.0};
  double intensity = 0.5;
};

struct ObjectPoints {
  Box3D box;
  std::vector<Point3> points;
  std::string source_frame;
  int source_index = -1;
};

struct AddedPoints {
  std::vector<Point3> points;
};

// One frame: labeled object point sets, optional per-object added sets, and
// the background set. `added` is either empty or parallel to `objects`.
struct Scene {
  std::string frame_id;
  std::vector<ObjectPoints> objects;
  std::vector<AddedPoints> added;
  std::vector<Point3> background;

  bool enhanced() const { return !added.empty(); }
};

// Database key: (class, direction bin, rotation bin), bins 0-based in [0, N).
struct PolarIndex {
  std::string class_label;
  int dir_bin = 0;
  int rot_bin = 0;

  auto operator<=>(const PolarIndex&) const = default;
};

inline double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod rounding at the wrap
  return r;
}

inline Eigen::Vector3d rotate_z(const Eigen::Vector3d& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

// Angle of the box center seen from the sensor, measured counter-clockwise
// from the +x (forward) axis in the xy-plane, in [0, 2pi). z is ignored.
inline double direction_angle(const Box3D& box) {
  if (box.center.x() == 0.0 && box.center.y() == 0.0) {
    throw DegenerateCenter("direction_angle: box center at sensor origin");
  }
  return normalize_angle(std::atan2(box.center.y(), box.center.x()));
}

inline double rotation_angle(const Box3D& box) { return normalize_angle(box.yaw); }

// floor(angle * N / 2pi), clamped into [0, N); partitions [0, 2pi) into N
// equal bins.
inline int angle_bin(double angle, int n_bins) {
  int b = static_cast<int>(std::floor(angle * static_cast<double>(n_bins) / kTwoPi));
  if (b < 0) b = 0;
  if (b >= n_bins) b = n_bins - 1;
  return b;
}

inline PolarIndex group_index(double alpha, double beta, const std::string& class_label, int n_bins) {
  return PolarIndex{class_label, angle_bin(alpha, n_bins), angle_bin(beta, n_bins)};
}

inline PolarIndex group_index(const Box3D& box, int n_bins) {
  return group_index(direction_angle(box), rotation_angle(box), box.class_label, n_bins);
}

// Sensor frame -> object frame: translate by -center, rotate by -yaw.
inline Point3 to_local(const Point3& p, const Box3D& box) {
  return {rotate_z(p.xyz - box.center, -box.yaw), p.intensity};
}

inline Point3 to_global(const Point3& p, const Box3D& box) {
  return {rotate_z(p.xyz, box.yaw) + box.center, p.intensity};
}

inline std::vector<Point3> to_local(const std::vector<Point3>& pts, const Box3D& box) {
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(to_local(p, box));
  return out;
}

inline std::vector<Point3> to_global(const std::vector<Point3>& pts, const Box3D& box) {
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(to_global(p, box));
  return out;
}

// Inclusive membership in the box expanded by `margin` on each axis.
inline bool point_in_box(const Point3& p, const Box3D& box, double margin = 0.0) {
  const Eigen::Vector3d q = rotate_z(p.xyz - box.center, -box.yaw);
  return std::abs(q.x()) <= 0.5 * box.dims.x() + margin &&
         std::abs(q.y()) <= 0.5 * box.dims.y() + margin &&
         std::abs(q.z()) <= 0.5 * box.dims.z() + margin;
}

// Merged view of a scene: raw object points, added points (if any), then
// background. Raw points keep their original values.
inline std::vector<Point3> all_points(const Scene& scene) {
  std::vector<Point3> out;
  std::size_t n = scene.background.size();
  for (const auto& o : scene.objects) n += o.points.size();
  for (const auto& a : scene.added) n += a.points.size();
  out.reserve(n);
  for (const auto& o : scene.objects) out.insert(out.end(), o.points.begin(), o.points.end());
  for (const auto& a : scene.added) out.insert(out.end(), a.points.begin(), a.points.end());
  out.insert(out.end(), scene.background.begin(), scene.background.end());
  return out;
}

inline std::vector<Box3D> scene_boxes(const Scene& scene) {
  std::vector<Box3D> boxes;
  boxes.reserve(scene.objects.size());
  for (const auto& o : scene.objects) boxes.push_back(o.box);
  return boxes;
}

// splitmix64; used to derive independent stream seeds from (seed, key...).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + b;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace lcfuse
