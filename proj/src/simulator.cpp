#include "lcfuse/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lcfuse/metrics.hpp"

namespace lcfuse {

std::vector<ClassSpec> default_classes() {
  std::vector<ClassSpec> classes(3);
  classes[0] = {"Car", {2.7, 1.65, 1.55}, {0.22, 0.1, 0.08}, 0.75};
  classes[1] = {"Pedestrian", {0.85, 0.65, 1.74}, {0.08, 0.06, 0.08}, 0.35};
  classes[2] = {"Cyclist", {1.76, 0.6, 1.72}, {0.12, 0.06, 0.07}, 0.55};
  return classes;
}

double ray_box_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box3D& box) {
  // slab test in the box frame
  const Eigen::Vector3d o = rotate_z(origin - box.center, -box.yaw);
  const Eigen::Vector3d d = rotate_z(dir, -box.yaw);
  double t_enter = 0.0, t_exit = std::numeric_limits<double>::max();
  for (int ax = 0; ax < 3; ++ax) {
    const double half = 0.5 * box.dims[ax];
    if (std::abs(d[ax]) < 1e-12) {
      if (o[ax] < -half || o[ax] > half) return -1.0;
      continue;
    }
    double t0 = (-half - o[ax]) / d[ax];
    double t1 = (half - o[ax]) / d[ax];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return -1.0;
  }
  if (t_exit < 1e-9 || t_enter < 1e-9) return -1.0;  // origin inside or behind
  return t_enter;
}

namespace {

double truncated_normal(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  double v = n(rng);
  return std::clamp(v, -3.0 * sigma, 3.0 * sigma);
}

}  // namespace

Scene generate_scene(const SimConfig& cfg, int index) {
  std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  std::uniform_int_distribution<int> n_obj_dist(cfg.min_objects, cfg.max_objects);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Scene scene;
  {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", index);
    scene.frame_id = buf;
  }

  const int n_objects = n_obj_dist(rng);
  std::vector<Box3D> boxes;
  for (int k = 0; k < n_objects; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      const auto& cls = cfg.classes[static_cast<std::size_t>(
          std::uniform_int_distribution<int>(0, static_cast<int>(cfg.classes.size()) - 1)(rng))];
      Box3D b;
      b.class_label = cls.name;
      std::normal_distribution<double> nd(0.0, 1.0);
      for (int ax = 0; ax < 3; ++ax) {
        const double s = std::clamp(nd(rng), -2.0, 2.0);
        b.dims[ax] = std::max(0.2, cls.dims_mean[ax] + s * cls.dims_sd[ax]);
      }
      const double r = cfg.place_range_min + (cfg.place_range_max - cfg.place_range_min) * u01(rng);
      const double az = (2.0 * u01(rng) - 1.0) * cfg.place_azimuth;
      b.center = {r * std::cos(az), r * std::sin(az), 0.5 * b.dims.z()};
      b.yaw = normalize_angle(u01(rng) * kTwoPi);
      if (b.center.x() > cfg.place_x_max || std::abs(b.center.y()) > cfg.place_y_abs_max) continue;
      bool overlaps = false;
      for (const auto& other : boxes) {
        Box3D ia = b, ib = other;
        ia.dims.x() += 1.2;
        ia.dims.y() += 1.2;
        if (bev_iou(ia, ib) > 0.0) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) {
        boxes.push_back(std::move(b));
        placed = true;
      }
    }
    if (!placed) throw PlacementFailure("scene " + scene.frame_id + ": could not place object " + std::to_string(k));
  }

  scene.objects.resize(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    scene.objects[i].box = boxes[i];
    scene.objects[i].source_frame = scene.frame_id;
    scene.objects[i].source_index = static_cast<int>(i);
  }

  // clutter boxes: varied footprints and heights, intensities overlapping the
  // object classes
  struct Clutter {
    Box3D box;
    double intensity;
  };
  std::vector<Clutter> clutter;
  const int n_clutter = std::uniform_int_distribution<int>(cfg.min_clutter, cfg.max_clutter)(rng);
  for (int k = 0; k < n_clutter; ++k) {
    for (int attempt = 0; attempt < 40; ++attempt) {
      Box3D b;
      b.class_label = "clutter";
      b.dims = {0.3 + 2.2 * u01(rng), 0.3 + 1.2 * u01(rng), 0.5 + 1.7 * u01(rng)};
      const double r = cfg.place_range_min + (cfg.place_range_max - cfg.place_range_min) * u01(rng);
      const double az = (2.0 * u01(rng) - 1.0) * cfg.place_azimuth;
      b.center = {r * std::cos(az), r * std::sin(az), 0.5 * b.dims.z()};
      b.yaw = normalize_angle(u01(rng) * kTwoPi);
      bool overlaps = false;
      for (const auto& other : boxes) {
        Box3D ia = b;
        ia.dims.x() += 1.2;
        ia.dims.y() += 1.2;
        if (bev_iou(ia, other) > 0.0) {
          overlaps = true;
          break;
        }
      }
      for (const auto& other : clutter) {
        if (!overlaps && bev_iou(b, other.box) > 0.0) overlaps = true;
      }
      if (!overlaps) {
        clutter.push_back({b, 0.2 + 0.6 * u01(rng)});
        break;
      }
    }
  }

  std::normal_distribution<double> intensity_noise(0.0, 0.05);
  const Eigen::Vector3d origin(0.0, 0.0, cfg.sensor_height);
  for (double az = -cfg.azimuth_span; az <= cfg.azimuth_span; az += cfg.angular_resolution) {
    for (double el = cfg.elevation_min; el <= cfg.elevation_max; el += cfg.elevation_step) {
      const double ce = std::cos(el);
      const Eigen::Vector3d dir(ce * std::cos(az), ce * std::sin(az), std::sin(el));
      double best_t = std::numeric_limits<double>::max();
      int hit = -1;  // >=0 object, -2 ground, -3-k clutter k
      for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
        const double t = ray_box_entry(origin, dir, boxes[bi]);
        if (t > 0.0 && t < best_t) {
          best_t = t;
          hit = static_cast<int>(bi);
        }
      }
      for (std::size_t ci = 0; ci < clutter.size(); ++ci) {
        const double t = ray_box_entry(origin, dir, clutter[ci].box);
        if (t > 0.0 && t < best_t) {
          best_t = t;
          hit = -3 - static_cast<int>(ci);
        }
      }
      if (dir.z() < -1e-9) {
        const double t_ground = -origin.z() / dir.z();
        if (t_ground < best_t) {
          best_t = t_ground;
          hit = -2;  // ground
        }
      }
      if (hit == -1 || best_t > cfg.max_range) continue;
      const double t = best_t + truncated_normal(rng, cfg.noise_sigma);
      const Eigen::Vector3d p = origin + t * dir;
      double intensity;
      if (hit >= 0) {
        const auto& cls_name = boxes[static_cast<std::size_t>(hit)].class_label;
        double base = 0.5;
        for (const auto& c : cfg.classes) {
          if (c.name == cls_name) base = c.intensity;
        }
        intensity = std::clamp(base + intensity_noise(rng), 0.0, 1.0);
        scene.objects[static_cast<std::size_t>(hit)].points.emplace_back(p, intensity);
      } else if (hit <= -3) {
        intensity = std::clamp(clutter[static_cast<std::size_t>(-3 - hit)].intensity + intensity_noise(rng),
                               0.0, 1.0);
        scene.background.emplace_back(p, intensity);
      } else {
        intensity = std::clamp(0.12 + intensity_noise(rng), 0.0, 1.0);
        scene.background.emplace_back(p, intensity);
      }
    }
  }
  return scene;
}

}  // namespace lcfuse
