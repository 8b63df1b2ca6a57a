#include "lcfuse/config.hpp"

#include <fstream>
#include <sstream>

namespace lcfuse {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = [] {
    std::map<std::string, std::string> m;
    m["sim.scene_count"] = "250";
    m["sim.val_count"] = "50";
    m["sim.min_objects"] = "3";
    m["sim.max_objects"] = "8";
    m["sim.angular_resolution"] = "0.0055";
    m["sim.elevation_min"] = "-0.42";
    m["sim.elevation_max"] = "0.03";
    m["sim.elevation_step"] = "0.014";
    m["sim.azimuth_span"] = "1.2";
    m["sim.max_range"] = "60";
    m["sim.noise_sigma"] = "0.02";
    m["sim.sensor_height"] = "2.3";
    m["sim.place_range_min"] = "6";
    m["sim.place_range_max"] = "38";
    m["sim.place_azimuth"] = "0.9";
    m["sim.place_x_max"] = "37";
    m["sim.place_y_abs_max"] = "17";
    m["sim.seed"] = "1";
    m["classes.names"] = "Car Pedestrian Cyclist";
    for (const auto& c : default_classes()) {
      m["classes.dims." + c.name] = fmt(c.dims_mean.x()) + " " + fmt(c.dims_mean.y()) + " " + fmt(c.dims_mean.z());
      m["classes.dims_sd." + c.name] = fmt(c.dims_sd.x()) + " " + fmt(c.dims_sd.y()) + " " + fmt(c.dims_sd.z());
      m["classes.intensity." + c.name] = fmt(c.intensity);
    }
    m["bev.x_min"] = "0";
    m["bev.x_max"] = "40";
    m["bev.y_min"] = "-20";
    m["bev.y_max"] = "20";
    m["bev.cell_size"] = "1.0";
    m["bev.lidar_channels"] = "16";
    m["bev.camera_channels"] = "4";
    m["bev.ground_z"] = "0";
    m["db.n_bins"] = "8";
    m["db.k_densest"] = "10";
    m["db.max_points"] = "5000";
    m["db.seed"] = "0";
    m["db.margin"] = "0.25";
    m["camera.noise_sigma"] = "0.25";
    m["camera.seed"] = "7";
    m["fusion.kind"] = "deep";
    m["fusion.depth"] = "3";
    m["fusion.hidden"] = "0";
    m["train.lambda"] = "1.0";
    m["train.sim_loss"] = "l2";
    m["train.sim_reduction"] = "mean";
    m["train.epochs"] = "70";
    m["train.lr"] = "0.001";
    m["train.momentum"] = "0.9";
    m["train.seed"] = "3";
    m["train.pos_weight"] = "8.0";
    m["train.reg_weight"] = "2.0";
    m["eval.iou_default"] = "0.5";
    m["eval.iou.Car"] = "0.7";
    m["eval.iou.Pedestrian"] = "0.5";
    m["eval.iou.Cyclist"] = "0.5";
    m["eval.score_threshold"] = "0.01";
    m["eval.nms_iou"] = "0.3";
    m["eval.max_detections"] = "64";
    return m;
  }();
  return d;
}

bool has_prefix(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

Config::Config() : values_(defaults()) {}

bool Config::known_key(const std::string& key) const {
  if (defaults().count(key)) return true;
  // per-class keys are open-ended
  return has_prefix(key, "classes.dims.") || has_prefix(key, "classes.dims_sd.") ||
         has_prefix(key, "classes.intensity.") || has_prefix(key, "eval.iou.");
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

Config Config::load(const std::filesystem::path& file_or_empty, const std::vector<std::string>& overrides) {
  Config cfg;
  if (!file_or_empty.empty()) {
    std::ifstream in(file_or_empty);
    if (!in) throw ConfigError("cannot open config file " + file_or_empty.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(file_or_empty.string() + ":" + std::to_string(line_no) + ": expected key = value");
      }
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + ov + "' is not key=value");
    cfg.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  return cfg;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + get(key));
  }
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " + get(key));
  }
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

std::string Config::hash() const {
  const std::uint64_t h = hash_string(canonical());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Config::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# resolved configuration, hash " << hash() << "\n" << canonical();
}

std::vector<ClassSpec> Config::classes() const {
  std::istringstream names(get("classes.names"));
  std::vector<ClassSpec> out;
  std::string name;
  while (names >> name) {
    ClassSpec spec;
    spec.name = name;
    std::istringstream dims(get("classes.dims." + name));
    std::istringstream sds(get("classes.dims_sd." + name));
    if (!(dims >> spec.dims_mean.x() >> spec.dims_mean.y() >> spec.dims_mean.z())) {
      throw ConfigError("classes.dims." + name + " must be three numbers");
    }
    if (!(sds >> spec.dims_sd.x() >> spec.dims_sd.y() >> spec.dims_sd.z())) {
      throw ConfigError("classes.dims_sd." + name + " must be three numbers");
    }
    spec.intensity = get_double("classes.intensity." + name);
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw ConfigError("classes.names is empty");
  return out;
}

SimConfig Config::sim() const {
  SimConfig s;
  s.scene_count = get_int("sim.scene_count");
  s.min_objects = get_int("sim.min_objects");
  s.max_objects = get_int("sim.max_objects");
  s.angular_resolution = get_double("sim.angular_resolution");
  s.elevation_min = get_double("sim.elevation_min");
  s.elevation_max = get_double("sim.elevation_max");
  s.elevation_step = get_double("sim.elevation_step");
  s.azimuth_span = get_double("sim.azimuth_span");
  s.max_range = get_double("sim.max_range");
  s.noise_sigma = get_double("sim.noise_sigma");
  s.sensor_height = get_double("sim.sensor_height");
  s.place_range_min = get_double("sim.place_range_min");
  s.place_range_max = get_double("sim.place_range_max");
  s.place_azimuth = get_double("sim.place_azimuth");
  s.place_x_max = get_double("sim.place_x_max");
  s.place_y_abs_max = get_double("sim.place_y_abs_max");
  s.seed = get_u64("sim.seed");
  s.classes = classes();
  if (s.scene_count < 1 || s.min_objects < 0 || s.max_objects < s.min_objects) {
    throw ConfigError("invalid sim scene/object counts");
  }
  if (s.angular_resolution <= 0 || s.elevation_step <= 0 || s.max_range <= 0) {
    throw ConfigError("sim resolutions and ranges must be positive");
  }
  return s;
}

BevConfig Config::bev() const {
  BevConfig b;
  b.x_min = get_double("bev.x_min");
  b.x_max = get_double("bev.x_max");
  b.y_min = get_double("bev.y_min");
  b.y_max = get_double("bev.y_max");
  b.cell_size = get_double("bev.cell_size");
  b.lidar_channels = get_int("bev.lidar_channels");
  b.camera_channels = get_int("bev.camera_channels");
  b.ground_z = get_double("bev.ground_z");
  if (b.x_max <= b.x_min || b.y_max <= b.y_min || b.cell_size <= 0) {
    throw ConfigError("bev ranges must be nonempty and cell_size positive");
  }
  if (b.lidar_channels < 1 || b.camera_channels < 1) throw ConfigError("bev channel counts must be >= 1");
  return b;
}

DbConfig Config::db() const {
  DbConfig d;
  d.n_bins = get_int("db.n_bins");
  d.k_densest = get_int("db.k_densest");
  d.max_points = get_int("db.max_points");
  d.seed = get_u64("db.seed");
  d.margin = get_double("db.margin");
  if (d.n_bins < 1 || d.k_densest < 1 || d.max_points < 1) {
    throw ConfigError("db.n_bins, db.k_densest and db.max_points must be >= 1");
  }
  if (d.margin < 0) throw ConfigError("db.margin must be >= 0");
  return d;
}

CameraConfig Config::camera() const {
  CameraConfig c;
  c.noise_sigma = get_double("camera.noise_sigma");
  c.seed = get_u64("camera.seed");
  return c;
}

TrainConfig Config::train() const {
  TrainConfig t;
  t.lambda = get_double("train.lambda");
  t.sim_loss = sim_loss_from_string(get("train.sim_loss"));
  const std::string red = get("train.sim_reduction");
  if (red == "mean") t.sim_reduction = Reduction::Mean;
  else if (red == "sum") t.sim_reduction = Reduction::Sum;
  else throw ConfigError("train.sim_reduction must be mean or sum");
  t.epochs = get_int("train.epochs");
  t.lr = get_double("train.lr");
  t.momentum = get_double("train.momentum");
  t.seed = get_u64("train.seed");
  t.fusion = fusion_kind_from_string(get("fusion.kind"));
  t.fusion_depth = get_int("fusion.depth");
  t.fusion_hidden = get_int("fusion.hidden");
  t.pos_weight = get_double("train.pos_weight");
  t.reg_weight = get_double("train.reg_weight");
  if (t.lambda < 0) throw ConfigError("train.lambda must be >= 0");
  if (t.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (t.fusion_depth < 1) throw ConfigError("fusion.depth must be >= 1");
  return t;
}

EvalRunConfig Config::eval_run() const {
  EvalRunConfig e;
  e.metrics.iou_thresholds.clear();
  e.metrics.default_iou_threshold = get_double("eval.iou_default");
  for (const auto& [k, v] : values_) {
    if (has_prefix(k, "eval.iou.")) e.metrics.iou_thresholds[k.substr(9)] = std::stod(v);
  }
  e.score_threshold = get_double("eval.score_threshold");
  e.nms_iou = get_double("eval.nms_iou");
  e.max_detections = get_int("eval.max_detections");
  return e;
}

}  // namespace lcfuse
