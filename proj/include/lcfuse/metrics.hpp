#pragma once

// Rotated-box BEV IoU (convex polygon clipping) and AP at 40 recall
// thresholds, per KITTI scoring conventions.

#include <map>
#include <string>
#include <vector>

#include "lcfuse/geometry.hpp"

namespace lcfuse {

struct NoClasses : DataError {
  using DataError::DataError;
};

struct Detection {
  Box3D box;
  double score = 0.0;
};

// Detections and ground truth of one frame (all classes mixed; evaluation
// filters by class_label).
struct EvalFrame {
  std::vector<Detection> detections;
  std::vector<Box3D> ground_truth;
};

// Intersection-over-union of the two yaw-rotated xy rectangles.
double bev_iou(const Box3D& a, const Box3D& b);

// Single-class AP@R40: greedy per-frame matching in descending score (each
// ground truth matched at most once at IoU >= threshold), precision taken at
// the 40 recall levels {1/40, ..., 40/40} with max-precision-at-recall>=r
// interpolation.
double ap_r40(const std::vector<EvalFrame>& frames, const std::string& class_label, double iou_threshold);

// Unweighted mean over present classes; throws NoClasses when empty.
double map_overall(const std::map<std::string, double>& per_class_ap);

struct EvalConfig {
  std::map<std::string, double> iou_thresholds;  // per class
  double default_iou_threshold = 0.5;

  double threshold_for(const std::string& cls) const {
    auto it = iou_thresholds.find(cls);
    return it == iou_thresholds.end() ? default_iou_threshold : it->second;
  }
  // KITTI convention: 0.7 for Car, 0.5 otherwise.
  static EvalConfig kitti_defaults() {
    EvalConfig c;
    c.iou_thresholds["Car"] = 0.7;
    c.default_iou_threshold = 0.5;
    return c;
  }
};

struct ApTable {
  std::map<std::string, double> per_class;
  double overall = 0.0;
};

// AP per class present in the ground truth, plus the overall mean.
ApTable evaluate_detections(const std::vector<EvalFrame>& frames, const EvalConfig& cfg);

// Detection dump lines: "frame class score x y z l w h yaw".
std::string write_detection_dump(const std::vector<std::pair<std::string, std::vector<Detection>>>& frames);
std::vector<std::pair<std::string, std::vector<Detection>>> read_detection_dump(const std::string& text);

}  // namespace lcfuse
