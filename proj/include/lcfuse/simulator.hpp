#pragma once

// Synthetic LiDAR scene generator. Surface points come from ray casting at a
// fixed angular resolution with first-hit occlusion, so point density falls
// with range and only sensor-facing surfaces are sampled.

#include <cstdint>
#include <vector>

#include "lcfuse/bev.hpp"
#include "lcfuse/geometry.hpp"

namespace lcfuse {

struct PlacementFailure : DataError {
  using DataError::DataError;
};

std::vector<ClassSpec> default_classes();

struct SimConfig {
  int scene_count = 250;
  int min_objects = 3, max_objects = 8;
  // unlabeled vertical structures (poles, bushes, walls); their returns land
  // in the background set, so sparse far objects compete with look-alikes
  int min_clutter = 6, max_clutter = 12;
  double angular_resolution = 0.0055;  // azimuth step, rad
  double elevation_min = -0.42, elevation_max = 0.03, elevation_step = 0.014;
  double azimuth_span = 1.2;           // cast sector: [-span, span] around +x
  double max_range = 60.0;
  double noise_sigma = 0.02;           // range jitter, truncated at 3 sigma
  double sensor_height = 2.3;          // ground plane sits at z = 0
  double place_range_min = 6.0, place_range_max = 38.0;
  double place_azimuth = 0.9;          // placement sector half-angle
  double place_x_max = 37.0;           // keep boxes inside the default BEV window
  double place_y_abs_max = 17.0;
  std::uint64_t seed = 1;
  std::vector<ClassSpec> classes = default_classes();
};

// Deterministic per (cfg.seed, index). Objects carry their ground-truth
// boxes; ray hits on boxes become object points, ground hits background.
Scene generate_scene(const SimConfig& cfg, int index);

// Ray/box first-hit parameter; negative when the ray misses. Exposed for the
// occlusion oracle in tests.
double ray_box_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box3D& box);

template <typename S>
Grid<S> render_camera_grid(const Scene& scene, const BevConfig& bev, const std::vector<ClassSpec>& classes,
                           const CameraConfig& cam) {
  return synth_camera_grid<S>(scene_boxes(scene), bev, classes, cam, hash_string(scene.frame_id));
}

}  // namespace lcfuse
