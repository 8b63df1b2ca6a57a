#pragma once

// KITTI-style dataset tree: training/{velodyne,label_2,calib} plus
// ImageSets/<split>.txt listing frame ids. Added point sets from enhancement
// live in a sidecar directory as velodyne-format payloads with per-object
// counts.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcfuse/kitti.hpp"

namespace lcfuse {

std::filesystem::path velodyne_path(const std::filesystem::path& root, const std::string& frame_id);
std::filesystem::path label_path(const std::filesystem::path& root, const std::string& frame_id);
std::filesystem::path calib_path(const std::filesystem::path& root, const std::string& frame_id);

std::vector<std::string> read_split_ids(const std::filesystem::path& root, const std::string& split);
void write_split_ids(const std::filesystem::path& root, const std::string& split,
                     const std::vector<std::string>& ids);

// Emit one frame: velodyne bytes (object points in object order, then
// background), labels through the camera-frame writer, and the calibration.
void write_kitti_frame(const std::filesystem::path& root, const Scene& scene, const CalibMatrices& calib);

// Parse + crop one frame; attaches added sets when added_dir is given.
Scene load_kitti_frame(const std::filesystem::path& root, const std::string& frame_id, double margin,
                       const std::optional<std::filesystem::path>& added_dir = std::nullopt);

// <added_dir>/<frame>.bin holds the concatenated added sets in object order;
// <added_dir>/<frame>.cnt lists one count per object.
void save_added_points(const std::filesystem::path& added_dir, const Scene& scene);
void load_added_points(const std::filesystem::path& added_dir, Scene& scene);

}  // namespace lcfuse
