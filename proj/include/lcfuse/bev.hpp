#pragma once

// Bird's-eye-view plumbing: pillar feature encoding, detection targets and
// decoding, and the synthetic camera-feature provider.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "lcfuse/geometry.hpp"
#include "lcfuse/metrics.hpp"
#include "lcfuse/tensor.hpp"

namespace lcfuse {

struct ConfigMismatch : DataError {
  using DataError::DataError;
};

struct BevConfig {
  double x_min = 0.0, x_max = 40.0;
  double y_min = -20.0, y_max = 20.0;
  double cell_size = 1.0;
  int lidar_channels = 16;   // C_l
  int camera_channels = 4;   // C_c
  double ground_z = 0.0;     // decoded boxes sit on this plane

  int grid_h() const { return static_cast<int>(std::llround((x_max - x_min) / cell_size)); }
  int grid_w() const { return static_cast<int>(std::llround((y_max - y_min) / cell_size)); }

  std::uint64_t fingerprint() const {
    std::uint64_t h = hash_string("bev");
    const auto mixd = [&h](double v) {
      std::uint64_t u;
      static_assert(sizeof(double) == 8);
      std::memcpy(&u, &v, 8);
      h = mix_seed(h, u);
    };
    mixd(x_min);
    mixd(x_max);
    mixd(y_min);
    mixd(y_max);
    mixd(cell_size);
    h = mix_seed(h, static_cast<std::uint64_t>(lidar_channels));
    h = mix_seed(h, static_cast<std::uint64_t>(camera_channels));
    mixd(ground_z);
    return h;
  }
};

inline constexpr int kPillarChannels = 4;  // log count, mean z, max z, mean intensity
inline constexpr int kHeadChannels = 7;    // objectness, off_x, off_y, log l, log w, sin, cos

// Per-cell pillar statistics; points outside the range are dropped and empty
// cells stay all-zero.
template <typename S>
Grid<S> bev_encode(const std::vector<Point3>& points, const BevConfig& bev) {
  const int h = bev.grid_h(), w = bev.grid_w();
  Grid<S> grid = Grid<S>::zeros(h, w, kPillarChannels);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(h * w);
  Eigen::VectorXd zsum = Eigen::VectorXd::Zero(h * w);
  Eigen::VectorXd zmax = Eigen::VectorXd::Zero(h * w);
  Eigen::VectorXd isum = Eigen::VectorXd::Zero(h * w);
  for (const auto& p : points) {
    const double fx = (p.xyz.x() - bev.x_min) / bev.cell_size;
    const double fy = (p.xyz.y() - bev.y_min) / bev.cell_size;
    const int i = static_cast<int>(std::floor(fx));
    const int j = static_cast<int>(std::floor(fy));
    if (i < 0 || i >= h || j < 0 || j >= w) continue;
    const int cell = i * w + j;
    if (count[cell] == 0.0 || p.xyz.z() > zmax[cell]) zmax[cell] = p.xyz.z();
    count[cell] += 1.0;
    zsum[cell] += p.xyz.z();
    isum[cell] += p.intensity;
  }
  for (int cell = 0; cell < h * w; ++cell) {
    if (count[cell] == 0.0) continue;
    grid.data(cell, 0) = static_cast<S>(std::log1p(count[cell]));
    grid.data(cell, 1) = static_cast<S>(zsum[cell] / count[cell]);
    grid.data(cell, 2) = static_cast<S>(zmax[cell]);
    grid.data(cell, 3) = static_cast<S>(isum[cell] / count[cell]);
  }
  return grid;
}

// Training targets. Every cell whose center falls inside a box footprint is
// a positive: it carries the mask bit and a regression row (offset_x,
// offset_y, log l, log w, sin yaw, cos yaw), offsets pointing at the box
// center in cell units and clamped to [-0.5, 0.5]. The cell containing the
// center gets exact offsets and objectness 1; the rest of the footprint gets
// a soft Gaussian objectness falloff. With a kernel-1 receptive field the
// footprint cells are near-indistinguishable from the center cell, so hard
// zeros there would fight the center label.
template <typename S>
struct DetectionTarget {
  Grid<S> objectness;   // (h,w,1), soft in [0,1]
  Grid<S> regression;   // (h,w,6)
  Grid<S> mask;         // (h,w,1), 1 at positive (footprint) cells
  Grid<S> center_mask;  // (h,w,1), 1 only at box-center cells
};

template <typename S>
DetectionTarget<S> encode_targets(const std::vector<Box3D>& boxes, const BevConfig& bev) {
  const int h = bev.grid_h(), w = bev.grid_w();
  DetectionTarget<S> t;
  t.objectness = Grid<S>::zeros(h, w, 1);
  t.regression = Grid<S>::zeros(h, w, 6);
  t.mask = Grid<S>::zeros(h, w, 1);
  t.center_mask = Grid<S>::zeros(h, w, 1);
  for (const auto& b : boxes) {
    const double fx = (b.center.x() - bev.x_min) / bev.cell_size;
    const double fy = (b.center.y() - bev.y_min) / bev.cell_size;
    const int ci = static_cast<int>(std::floor(fx));
    const int cj = static_cast<int>(std::floor(fy));
    if (ci < 0 || ci >= h || cj < 0 || cj >= w) continue;

    const double sigma_cells = std::max(0.7, 0.3 * std::max(b.dims.x(), b.dims.y()) / bev.cell_size);
    const double reach = 0.5 * std::hypot(b.dims.x(), b.dims.y());
    const int i0 = std::max(0, static_cast<int>(std::floor((b.center.x() - reach - bev.x_min) / bev.cell_size)));
    const int i1 = std::min(h - 1, static_cast<int>(std::floor((b.center.x() + reach - bev.x_min) / bev.cell_size)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.center.y() - reach - bev.y_min) / bev.cell_size)));
    const int j1 = std::min(w - 1, static_cast<int>(std::floor((b.center.y() + reach - bev.y_min) / bev.cell_size)));
    for (int ii = i0; ii <= i1; ++ii) {
      for (int jj = j0; jj <= j1; ++jj) {
        const bool is_center = ii == ci && jj == cj;
        Point3 cc(bev.x_min + (ii + 0.5) * bev.cell_size, bev.y_min + (jj + 0.5) * bev.cell_size,
                  b.center.z());
        if (!is_center && !point_in_box(cc, b)) continue;
        const int cell = ii * w + jj;
        const double di = fx - (ii + 0.5), dj = fy - (jj + 0.5);
        const double soft =
            is_center ? 1.0 : std::exp(-(di * di + dj * dj) / (2.0 * sigma_cells * sigma_cells));
        t.objectness.data(cell, 0) = std::max(t.objectness.data(cell, 0), static_cast<S>(soft));
        if (t.mask.data(cell, 0) != S(0)) continue;  // first box keeps the cell
        t.mask.data(cell, 0) = S(1);
        if (is_center) t.center_mask.data(cell, 0) = S(1);
        t.regression.data(cell, 0) = static_cast<S>(std::clamp(di, -0.5, 0.5));
        t.regression.data(cell, 1) = static_cast<S>(std::clamp(dj, -0.5, 0.5));
        t.regression.data(cell, 2) = static_cast<S>(std::log(b.dims.x()));
        t.regression.data(cell, 3) = static_cast<S>(std::log(b.dims.y()));
        t.regression.data(cell, 4) = static_cast<S>(std::sin(b.yaw));
        t.regression.data(cell, 5) = static_cast<S>(std::cos(b.yaw));
      }
    }
  }
  return t;
}

// Raw head output (h,w,7) -> scored boxes. Objectness is passed through a
// sigmoid; dims come from exp; yaw from atan2 (renormalizing sin/cos); the
// class label is the spec whose mean dims are nearest in log space; z and
// height come from that spec. Only cells that are a 3x3 local score maximum
// decode: soft-target training scores a whole footprint, and the off-center
// cells carry unsupervised regression rows.
template <typename S>
std::vector<Detection> decode_detections(const Grid<S>& head_out, const BevConfig& bev,
                                         const std::vector<ClassSpec>& classes, double score_threshold) {
  if (head_out.shape.c != kHeadChannels) {
    throw ShapeMismatch("decode_detections: head output must have 7 channels");
  }
  std::vector<Detection> dets;
  const int h = head_out.shape.h, w = head_out.shape.w;
  const auto is_local_max = [&](int i, int j) {
    const S v = head_out.data(i * w + j, 0);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const int ni = i + di, nj = j + dj;
        if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
        const S nv = head_out.data(ni * w + nj, 0);
        // strict on earlier neighbors so exact ties keep one cell
        if (nv > v || (nv == v && (ni * w + nj) < (i * w + j))) return false;
      }
    }
    return true;
  };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int cell = i * w + j;
      const double logit = static_cast<double>(head_out.data(cell, 0));
      const double score = 1.0 / (1.0 + std::exp(-logit));
      if (score < score_threshold) continue;
      if (!is_local_max(i, j)) continue;
      const double off_x = static_cast<double>(head_out.data(cell, 1));
      const double off_y = static_cast<double>(head_out.data(cell, 2));
      const double log_l = static_cast<double>(head_out.data(cell, 3));
      const double log_w = static_cast<double>(head_out.data(cell, 4));
      double sy = static_cast<double>(head_out.data(cell, 5));
      double cy = static_cast<double>(head_out.data(cell, 6));
      const double norm = std::hypot(sy, cy);
      double yaw = 0.0;
      if (norm > 1e-12) {
        sy /= norm;
        cy /= norm;
        yaw = normalize_angle(std::atan2(sy, cy));
      }
      Detection d;
      d.score = score;
      d.box.center.x() = bev.x_min + (i + 0.5 + off_x) * bev.cell_size;
      d.box.center.y() = bev.y_min + (j + 0.5 + off_y) * bev.cell_size;
      d.box.dims.x() = std::exp(log_l);
      d.box.dims.y() = std::exp(log_w);
      d.box.yaw = yaw;
      if (!classes.empty()) {
        double best = std::numeric_limits<double>::max();
        const ClassSpec* pick = &classes.front();
        for (const auto& c : classes) {
          const double dl = log_l - std::log(c.dims_mean.x());
          const double dw = log_w - std::log(c.dims_mean.y());
          const double dist = dl * dl + dw * dw;
          if (dist < best) {
            best = dist;
            pick = &c;
          }
        }
        d.box.class_label = pick->name;
        d.box.dims.z() = pick->dims_mean.z();
      } else {
        d.box.dims.z() = 1.0;
      }
      d.box.center.z() = bev.ground_z + 0.5 * d.box.dims.z();
      dets.push_back(std::move(d));
    }
  }
  return dets;
}

// Greedy class-agnostic NMS by BEV IoU, descending score.
inline std::vector<Detection> nms_bev(std::vector<Detection> dets, double iou_threshold,
                                      std::size_t max_detections = 128) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (bev_iou(d.box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(d);
      if (kept.size() >= max_detections) break;
    }
  }
  return kept;
}

struct CameraConfig {
  double noise_sigma = 0.25;
  std::uint64_t seed = 0;
};

// Ideal BEV camera stand-in: channel 0 is the object-footprint silhouette,
// channels 1..K are per-class one-hot coverage (cell centers inside the
// rotated footprint), plus Gaussian noise on every channel. Information-rich
// at all ranges, unlike the LiDAR sweep.
template <typename S>
Grid<S> synth_camera_grid(const std::vector<Box3D>& boxes, const BevConfig& bev,
                          const std::vector<ClassSpec>& classes, const CameraConfig& cam,
                          std::uint64_t frame_key) {
  const int n_cls = static_cast<int>(classes.size());
  if (bev.camera_channels != n_cls + 1) {
    throw ConfigMismatch("camera_channels must equal 1 + class count (" + std::to_string(n_cls + 1) + ")");
  }
  const int h = bev.grid_h(), w = bev.grid_w();
  Grid<S> grid = Grid<S>::zeros(h, w, bev.camera_channels);
  for (const auto& b : boxes) {
    int ch = -1;
    for (int ci = 0; ci < n_cls; ++ci) {
      if (classes[static_cast<std::size_t>(ci)].name == b.class_label) ch = ci + 1;
    }
    // conservative cell window around the box
    const double reach = 0.5 * std::hypot(b.dims.x(), b.dims.y());
    const int i0 = std::max(0, static_cast<int>(std::floor((b.center.x() - reach - bev.x_min) / bev.cell_size)));
    const int i1 = std::min(h - 1, static_cast<int>(std::floor((b.center.x() + reach - bev.x_min) / bev.cell_size)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.center.y() - reach - bev.y_min) / bev.cell_size)));
    const int j1 = std::min(w - 1, static_cast<int>(std::floor((b.center.y() + reach - bev.y_min) / bev.cell_size)));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        Point3 cell_center(bev.x_min + (i + 0.5) * bev.cell_size, bev.y_min + (j + 0.5) * bev.cell_size,
                           b.center.z());
        if (!point_in_box(cell_center, b)) continue;
        grid.data(i * w + j, 0) = S(1);
        if (ch > 0) grid.data(i * w + j, ch) = S(1);
      }
    }
  }
  std::mt19937_64 rng(mix_seed(cam.seed, frame_key));
  std::normal_distribution<double> noise(0.0, cam.noise_sigma);
  if (cam.noise_sigma > 0.0) {
    for (long k = 0; k < grid.data.size(); ++k) grid.data.data()[k] += static_cast<S>(noise(rng));
  }
  return grid;
}

}  // namespace lcfuse
