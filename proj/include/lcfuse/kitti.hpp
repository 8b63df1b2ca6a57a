#pragma once

// Bit-exact readers/writers for KITTI velodyne scans, label files and
// calibration, plus object cropping and ASCII PLY export.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lcfuse/geometry.hpp"

namespace lcfuse {

struct TruncatedFile : DataError {
  using DataError::DataError;
};
struct NonFiniteValue : DataError {
  using DataError::DataError;
};
struct MalformedLine : DataError {
  using DataError::DataError;
};

struct CalibMatrices {
  Eigen::Matrix<double, 3, 4> tr_velo_to_cam;
  Eigen::Matrix3d r0_rect;

  static CalibMatrices identity();
  // Axis-permutation extrinsics used by the synthetic dataset:
  // cam x = -velo y, cam y = -velo z, cam z = velo x.
  static CalibMatrices synthetic();
};

// One raw label row (camera-frame values as stored on disk).
struct KittiLabel {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  Eigen::Vector4d bbox2d{0, 0, 0, 0};
  Eigen::Vector3d dims_hwl{0, 0, 0};      // height, width, length
  Eigen::Vector3d location_cam{0, 0, 0};  // bottom-face center, camera frame
  double rotation_y = 0.0;
};

// Little-endian f32 quadruplets (x, y, z, intensity). Intensities outside
// [0,1] are clamped; the count of clamped values is reported via `clamped`
// when non-null.
std::vector<Point3> read_velodyne(const std::vector<std::byte>& bytes, std::size_t* clamped = nullptr);
std::vector<std::byte> write_velodyne(const std::vector<Point3>& points);

std::vector<KittiLabel> parse_labels(const std::string& text);
// Camera-frame labels -> LiDAR-frame boxes. "DontCare" rows are skipped.
std::vector<Box3D> read_labels(const std::string& text, const CalibMatrices& calib);
std::string write_labels(const std::vector<Box3D>& boxes, const CalibMatrices& calib);

CalibMatrices read_calib(const std::string& text);
std::string write_calib(const CalibMatrices& calib);

// Assign each point to the first box (input order) whose margin-expanded
// volume contains it; the rest become background.
Scene crop_objects(const std::vector<Point3>& points, const std::vector<Box3D>& boxes, double margin,
                   const std::string& frame_id = {});

// ASCII PLY with per-vertex RGB. `colors` must be empty (all black) or
// parallel to `points`.
std::string write_ply(const std::vector<Point3>& points, const std::vector<Eigen::Vector3i>& colors = {});
// Raw points in black, added points in magenta (255, 64, 255).
std::string write_scene_ply(const Scene& scene);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lcfuse
