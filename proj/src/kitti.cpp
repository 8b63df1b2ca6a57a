#include "lcfuse/kitti.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lcfuse {

namespace {

float read_f32_le(const std::byte* p) {
  std::uint32_t u = static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(p[0])) |
                    static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(p[1])) << 8 |
                    static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(p[2])) << 16 |
                    static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(p[3])) << 24;
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void write_f32_le(std::vector<std::byte>& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  out.push_back(std::byte(u & 0xff));
  out.push_back(std::byte((u >> 8) & 0xff));
  out.push_back(std::byte((u >> 16) & 0xff));
  out.push_back(std::byte((u >> 24) & 0xff));
}

Eigen::Matrix4d to_homogeneous(const Eigen::Matrix<double, 3, 4>& m) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h.topRows<3>() = m;
  return h;
}

}  // namespace

CalibMatrices CalibMatrices::identity() {
  CalibMatrices c;
  c.tr_velo_to_cam.setZero();
  c.tr_velo_to_cam.leftCols<3>() = Eigen::Matrix3d::Identity();
  c.r0_rect = Eigen::Matrix3d::Identity();
  return c;
}

CalibMatrices CalibMatrices::synthetic() {
  CalibMatrices c;
  c.tr_velo_to_cam.setZero();
  c.tr_velo_to_cam(0, 1) = -1.0;
  c.tr_velo_to_cam(1, 2) = -1.0;
  c.tr_velo_to_cam(2, 0) = 1.0;
  c.r0_rect = Eigen::Matrix3d::Identity();
  return c;
}

std::vector<Point3> read_velodyne(const std::vector<std::byte>& bytes, std::size_t* clamped) {
  if (bytes.size() % 16 != 0) {
    throw TruncatedFile("velodyne stream length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  std::vector<Point3> pts;
  pts.reserve(bytes.size() / 16);
  std::size_t n_clamped = 0;
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    const float x = read_f32_le(bytes.data() + off);
    const float y = read_f32_le(bytes.data() + off + 4);
    const float z = read_f32_le(bytes.data() + off + 8);
    float i = read_f32_le(bytes.data() + off + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(i)) {
      throw NonFiniteValue("velodyne point " + std::to_string(off / 16) + " contains NaN/Inf");
    }
    if (i < 0.0f || i > 1.0f) {
      i = std::clamp(i, 0.0f, 1.0f);
      ++n_clamped;
    }
    pts.emplace_back(x, y, z, i);
  }
  if (clamped) *clamped = n_clamped;
  return pts;
}

std::vector<std::byte> write_velodyne(const std::vector<Point3>& points) {
  std::vector<std::byte> out;
  out.reserve(points.size() * 16);
  for (const auto& p : points) {
    write_f32_le(out, static_cast<float>(p.xyz.x()));
    write_f32_le(out, static_cast<float>(p.xyz.y()));
    write_f32_le(out, static_cast<float>(p.xyz.z()));
    write_f32_le(out, static_cast<float>(p.intensity));
  }
  return out;
}

std::vector<KittiLabel> parse_labels(const std::string& text) {
  std::vector<KittiLabel> labels;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    // 15 fields per KITTI layout; a 16th (score) is tolerated.
    if (tok.size() != 15 && tok.size() != 16) {
      throw MalformedLine("label line " + std::to_string(line_no) + ": expected 15 fields, got " +
                          std::to_string(tok.size()));
    }
    try {
      KittiLabel l;
      l.type = tok[0];
      l.truncated = std::stod(tok[1]);
      l.occluded = static_cast<int>(std::stod(tok[2]));
      l.alpha = std::stod(tok[3]);
      for (int i = 0; i < 4; ++i) l.bbox2d[i] = std::stod(tok[4 + i]);
      for (int i = 0; i < 3; ++i) l.dims_hwl[i] = std::stod(tok[8 + i]);
      for (int i = 0; i < 3; ++i) l.location_cam[i] = std::stod(tok[11 + i]);
      l.rotation_y = std::stod(tok[14]);
      labels.push_back(std::move(l));
    } catch (const std::invalid_argument&) {
      throw MalformedLine("label line " + std::to_string(line_no) + ": non-numeric field");
    }
  }
  return labels;
}

namespace {

Eigen::Matrix4d velo_to_rect_h(const CalibMatrices& calib) {
  Eigen::Matrix4d r0 = Eigen::Matrix4d::Identity();
  r0.topLeftCorner<3, 3>() = calib.r0_rect;
  return r0 * to_homogeneous(calib.tr_velo_to_cam);
}

double wrap_pi(double a) {
  double r = normalize_angle(a);
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

}  // namespace

// Camera frame (x right, y down, z forward), location at the bottom-face
// center. Conversion: rect -> ref via R0^-1, ref -> velo via Tr^-1, then the
// center is lifted by h/2 along velo z and yaw maps as -ry - pi/2.
std::vector<Box3D> read_labels(const std::string& text, const CalibMatrices& calib) {
  const Eigen::Matrix4d rect_to_velo = velo_to_rect_h(calib).inverse();
  std::vector<Box3D> boxes;
  for (const auto& l : parse_labels(text)) {
    if (l.type == "DontCare") continue;
    if (l.dims_hwl.minCoeff() <= 0.0) {
      throw MalformedLine("label of type " + l.type + " has non-positive dims");
    }
    const Eigen::Vector4d v = rect_to_velo * l.location_cam.homogeneous();
    Box3D b;
    b.dims = Eigen::Vector3d(l.dims_hwl.z(), l.dims_hwl.y(), l.dims_hwl.x());
    b.center = v.head<3>();
    b.center.z() += 0.5 * b.dims.z();
    b.yaw = normalize_angle(-l.rotation_y - 0.5 * std::numbers::pi);
    b.class_label = l.type;
    boxes.push_back(std::move(b));
  }
  return boxes;
}

std::string write_labels(const std::vector<Box3D>& boxes, const CalibMatrices& calib) {
  const Eigen::Matrix4d velo_to_rect = velo_to_rect_h(calib);
  std::ostringstream out;
  char buf[512];
  for (const auto& b : boxes) {
    Eigen::Vector3d bottom = b.center;
    bottom.z() -= 0.5 * b.dims.z();
    const Eigen::Vector4d cam = velo_to_rect * bottom.homogeneous();
    const double ry = wrap_pi(-b.yaw - 0.5 * std::numbers::pi);
    const double alpha = wrap_pi(ry - std::atan2(cam.x(), cam.z()));
    std::snprintf(buf, sizeof(buf),
                  "%s 0.00 0 %.6f 0.00 0.00 50.00 50.00 %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                  b.class_label.c_str(), alpha, b.dims.z(), b.dims.y(), b.dims.x(), cam.x(), cam.y(), cam.z(),
                  ry);
    out << buf;
  }
  return out.str();
}

CalibMatrices read_calib(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> tr, r0;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    if (key != "Tr_velo_to_cam" && key != "R0_rect") continue;
    std::istringstream vs(line.substr(colon + 1));
    std::vector<double> vals;
    double v;
    while (vs >> v) vals.push_back(v);
    if (key == "Tr_velo_to_cam") tr = vals;
    if (key == "R0_rect") r0 = vals;
  }
  if (tr.size() != 12) throw DataError("calib: Tr_velo_to_cam missing or not 12 values");
  if (r0.size() != 9) throw DataError("calib: R0_rect missing or not 9 values");
  CalibMatrices c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) c.tr_velo_to_cam(i, j) = tr[static_cast<std::size_t>(i * 4 + j)];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c.r0_rect(i, j) = r0[static_cast<std::size_t>(i * 3 + j)];
  const Eigen::Matrix3d gram = c.r0_rect.transpose() * c.r0_rect - Eigen::Matrix3d::Identity();
  if (gram.cwiseAbs().maxCoeff() >= 1e-3) throw DataError("calib: R0_rect is not orthonormal");
  return c;
}

std::string write_calib(const CalibMatrices& calib) {
  std::ostringstream out;
  out << "Tr_velo_to_cam:";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) out << " " << calib.tr_velo_to_cam(i, j);
  out << "\nR0_rect:";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << " " << calib.r0_rect(i, j);
  out << "\n";
  return out.str();
}

Scene crop_objects(const std::vector<Point3>& points, const std::vector<Box3D>& boxes, double margin,
                   const std::string& frame_id) {
  Scene scene;
  scene.frame_id = frame_id;
  scene.objects.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    ObjectPoints obj;
    obj.box = boxes[i];
    obj.source_frame = frame_id;
    obj.source_index = static_cast<int>(i);
    scene.objects.push_back(std::move(obj));
  }
  for (const auto& p : points) {
    bool assigned = false;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (point_in_box(p, boxes[i], margin)) {
        scene.objects[i].points.push_back(p);
        assigned = true;
        break;
      }
    }
    if (!assigned) scene.background.push_back(p);
  }
  return scene;
}

std::string write_ply(const std::vector<Point3>& points, const std::vector<Eigen::Vector3i>& colors) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  char buf[128];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3i c = colors.empty() ? Eigen::Vector3i(0, 0, 0) : colors[i];
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d\n", points[i].xyz.x(), points[i].xyz.y(),
                  points[i].xyz.z(), c.x(), c.y(), c.z());
    out << buf;
  }
  return out.str();
}

std::string write_scene_ply(const Scene& scene) {
  std::vector<Point3> pts;
  std::vector<Eigen::Vector3i> colors;
  const Eigen::Vector3i black(0, 0, 0);
  const Eigen::Vector3i magenta(255, 64, 255);
  for (const auto& o : scene.objects) {
    for (const auto& p : o.points) {
      pts.push_back(p);
      colors.push_back(black);
    }
  }
  for (const auto& a : scene.added) {
    for (const auto& p : a.points) {
      pts.push_back(p);
      colors.push_back(magenta);
    }
  }
  for (const auto& p : scene.background) {
    pts.push_back(p);
    colors.push_back(black);
  }
  return write_ply(pts, colors);
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(buf.size());
  std::memcpy(out.data(), buf.data(), buf.size());
  return out;
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace lcfuse
