#include "lcfuse/dataset.hpp"

#include <fstream>
#include <sstream>

namespace lcfuse {

namespace fs = std::filesystem;

fs::path velodyne_path(const fs::path& root, const std::string& frame_id) {
  return root / "training" / "velodyne" / (frame_id + ".bin");
}
fs::path label_path(const fs::path& root, const std::string& frame_id) {
  return root / "training" / "label_2" / (frame_id + ".txt");
}
fs::path calib_path(const fs::path& root, const std::string& frame_id) {
  return root / "training" / "calib" / (frame_id + ".txt");
}

std::vector<std::string> read_split_ids(const fs::path& root, const std::string& split) {
  const fs::path p = root / "ImageSets" / (split + ".txt");
  std::ifstream in(p);
  if (!in) throw DataError("cannot open split file " + p.string());
  std::vector<std::string> ids;
  std::string id;
  while (in >> id) ids.push_back(id);
  return ids;
}

void write_split_ids(const fs::path& root, const std::string& split, const std::vector<std::string>& ids) {
  fs::create_directories(root / "ImageSets");
  std::ofstream out(root / "ImageSets" / (split + ".txt"), std::ios::trunc);
  for (const auto& id : ids) out << id << "\n";
}

void write_kitti_frame(const fs::path& root, const Scene& scene, const CalibMatrices& calib) {
  fs::create_directories(root / "training" / "velodyne");
  fs::create_directories(root / "training" / "label_2");
  fs::create_directories(root / "training" / "calib");
  Scene raw = scene;
  raw.added.clear();
  write_file_bytes(velodyne_path(root, scene.frame_id), write_velodyne(all_points(raw)));
  write_file_text(label_path(root, scene.frame_id), write_labels(scene_boxes(scene), calib));
  write_file_text(calib_path(root, scene.frame_id), write_calib(calib));
}

Scene load_kitti_frame(const fs::path& root, const std::string& frame_id, double margin,
                       const std::optional<fs::path>& added_dir) {
  const auto points = read_velodyne(read_file_bytes(velodyne_path(root, frame_id)));
  const auto calib = read_calib(read_file_text(calib_path(root, frame_id)));
  const auto boxes = read_labels(read_file_text(label_path(root, frame_id)), calib);
  Scene scene = crop_objects(points, boxes, margin, frame_id);
  if (added_dir) load_added_points(*added_dir, scene);
  return scene;
}

void save_added_points(const fs::path& added_dir, const Scene& scene) {
  if (scene.added.size() != scene.objects.size()) {
    throw DataError("scene " + scene.frame_id + " has no added sets to save");
  }
  fs::create_directories(added_dir);
  std::vector<Point3> merged;
  std::ostringstream counts;
  for (const auto& a : scene.added) {
    merged.insert(merged.end(), a.points.begin(), a.points.end());
    counts << a.points.size() << "\n";
  }
  write_file_bytes(added_dir / (scene.frame_id + ".bin"), write_velodyne(merged));
  write_file_text(added_dir / (scene.frame_id + ".cnt"), counts.str());
}

void load_added_points(const fs::path& added_dir, Scene& scene) {
  const fs::path bin = added_dir / (scene.frame_id + ".bin");
  const fs::path cnt = added_dir / (scene.frame_id + ".cnt");
  const auto points = read_velodyne(read_file_bytes(bin));
  std::istringstream counts(read_file_text(cnt));
  std::vector<std::size_t> ns;
  std::size_t n;
  while (counts >> n) ns.push_back(n);
  if (ns.size() != scene.objects.size()) {
    throw DataError("added counts in " + cnt.string() + " do not match " +
                    std::to_string(scene.objects.size()) + " objects");
  }
  std::size_t total = 0;
  for (auto c : ns) total += c;
  if (total != points.size()) throw DataError("added payload size mismatch in " + bin.string());
  scene.added.clear();
  scene.added.resize(ns.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    scene.added[i].points.assign(points.begin() + static_cast<std::ptrdiff_t>(off),
                                 points.begin() + static_cast<std::ptrdiff_t>(off + ns[i]));
    off += ns[i];
  }
}

}  // namespace lcfuse
