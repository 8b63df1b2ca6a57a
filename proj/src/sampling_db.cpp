#include "lcfuse/sampling_db.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lcfuse/version.hpp"

namespace lcfuse {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'D', 'B'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f32(std::ostream& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(out, u);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw CorruptPayload("db: unexpected end of stream");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CorruptPayload("db: unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

float get_f32(std::istream& in) {
  const std::uint32_t u = get_u32(in);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

bool DenseObjectDB::has_class(const std::string& cls) const {
  for (const auto& [key, entry] : entries) {
    if (key.class_label == cls) return true;
  }
  return false;
}

CanonicalObject canonicalize(const ObjectPoints& obj) {
  if (obj.points.empty()) throw EmptyObject("canonicalize: object has no points");
  CanonicalObject canon;
  canon.mean_source_dims = obj.box.dims;
  canon.min_source_dim = obj.box.dims.minCoeff();
  canon.points.reserve(obj.points.size());
  for (const auto& p : obj.points) {
    const Point3 local = to_local(p, obj.box);
    canon.points.emplace_back(local.xyz.cwiseQuotient(obj.box.dims), p.intensity);
  }
  return canon;
}

std::vector<Point3> decanonicalize(const CanonicalObject& canon, const Box3D& box, double intensity) {
  std::vector<Point3> out;
  out.reserve(canon.points.size());
  for (const auto& p : canon.points) {
    const Point3 local(p.xyz.cwiseProduct(box.dims), intensity);
    out.push_back(to_global(local, box));
  }
  return out;
}

DenseObjectDB build_database(const std::vector<Scene>& scenes, const DbConfig& cfg) {
  struct Member {
    const ObjectPoints* obj;
    std::string frame_id;
    int index;
  };
  std::map<PolarIndex, std::vector<Member>> bins;
  for (const auto& scene : scenes) {
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      const ObjectPoints& obj = scene.objects[oi];
      if (obj.points.empty()) continue;  // nothing to contribute
      const PolarIndex key = group_index(obj.box, cfg.n_bins);
      const std::string frame = obj.source_frame.empty() ? scene.frame_id : obj.source_frame;
      const int index = obj.source_index >= 0 ? obj.source_index : static_cast<int>(oi);
      bins[key].push_back({&obj, frame, index});
    }
  }

  DenseObjectDB db;
  db.config = cfg;
  for (auto& [key, members] : bins) {
    // densest first; ties by (frame id, object index) ascending
    std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
      if (a.obj->points.size() != b.obj->points.size()) return a.obj->points.size() > b.obj->points.size();
      if (a.frame_id != b.frame_id) return a.frame_id < b.frame_id;
      return a.index < b.index;
    });
    const std::size_t take = std::min<std::size_t>(members.size(), static_cast<std::size_t>(cfg.k_densest));

    DbEntry entry;
    Eigen::Vector3d dims_sum(0, 0, 0);
    double min_dim = std::numeric_limits<double>::max();
    std::vector<Point3> merged;
    for (std::size_t mi = 0; mi < take; ++mi) {
      const Member& m = members[mi];
      const CanonicalObject canon = canonicalize(*m.obj);
      merged.insert(merged.end(), canon.points.begin(), canon.points.end());
      dims_sum += m.obj->box.dims;
      min_dim = std::min(min_dim, m.obj->box.dims.minCoeff());
      entry.provenance.emplace_back(m.frame_id, m.index);
    }
    entry.object.mean_source_dims = dims_sum / static_cast<double>(take);
    entry.object.min_source_dim = min_dim;

    if (merged.size() > static_cast<std::size_t>(cfg.max_points)) {
      // Seed keyed by (seed, bin) so the subsample is independent of the
      // order bins are processed in.
      std::uint64_t s = mix_seed(cfg.seed, hash_string(key.class_label));
      s = mix_seed(s, static_cast<std::uint64_t>(key.dir_bin) * 1000003ULL +
                          static_cast<std::uint64_t>(key.rot_bin));
      std::mt19937_64 rng(s);
      std::vector<std::uint32_t> idx(merged.size());
      std::iota(idx.begin(), idx.end(), 0u);
      // partial Fisher-Yates: first max_points entries become the sample
      for (int i = 0; i < cfg.max_points; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
      }
      idx.resize(static_cast<std::size_t>(cfg.max_points));
      std::sort(idx.begin(), idx.end());  // keep original point order
      std::vector<Point3> sampled;
      sampled.reserve(idx.size());
      for (const auto i : idx) sampled.push_back(merged[i]);
      merged = std::move(sampled);
    }
    entry.object.points = std::move(merged);
    db.entries.emplace(key, std::move(entry));
  }
  return db;
}

void save_db(const DenseObjectDB& db, std::ostream& out, const std::string& config_hash) {
  nlohmann::json header;
  header["config"] = {{"n_bins", db.config.n_bins},
                      {"k_densest", db.config.k_densest},
                      {"max_points", db.config.max_points},
                      {"seed", db.config.seed},
                      {"margin", db.config.margin}};
  if (!config_hash.empty()) header["config_hash"] = config_hash;
  header["tool_version"] = kToolVersion;
  std::map<std::string, bool> classes;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, entry] : db.entries) {
    classes[key.class_label] = true;
    nlohmann::json prov = nlohmann::json::array();
    for (const auto& [frame, idx] : entry.provenance) prov.push_back({frame, idx});
    entries.push_back({{"class", key.class_label},
                       {"dir_bin", key.dir_bin},
                       {"rot_bin", key.rot_bin},
                       {"count", entry.object.points.size()},
                       {"mean_dims", {entry.object.mean_source_dims.x(), entry.object.mean_source_dims.y(),
                                      entry.object.mean_source_dims.z()}},
                       {"min_source_dim", entry.object.min_source_dim},
                       {"provenance", prov}});
  }
  nlohmann::json class_list = nlohmann::json::array();
  for (const auto& [cls, present] : classes) class_list.push_back(cls);
  header["classes"] = class_list;
  header["entries"] = entries;

  const std::string header_str = header.dump();
  out.write(kMagic, 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header_str.size()));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [key, entry] : db.entries) {
    for (const auto& p : entry.object.points) {
      put_f32(out, static_cast<float>(p.xyz.x()));
      put_f32(out, static_cast<float>(p.xyz.y()));
      put_f32(out, static_cast<float>(p.xyz.z()));
      put_f32(out, static_cast<float>(p.intensity));
    }
  }
}

DenseObjectDB load_db(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw BadMagic("db: bad magic");
  const std::uint16_t version = get_u16(in);
  if (version != kVersion) {
    throw VersionMismatch("db: version " + std::to_string(version) + ", expected " + std::to_string(kVersion));
  }
  const std::uint32_t header_len = get_u32(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw CorruptPayload("db: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayload(std::string("db: header parse: ") + e.what());
  }

  DenseObjectDB db;
  db.config.n_bins = header.at("config").at("n_bins").get<int>();
  db.config.k_densest = header.at("config").at("k_densest").get<int>();
  db.config.max_points = header.at("config").at("max_points").get<int>();
  db.config.seed = header.at("config").at("seed").get<std::uint64_t>();
  db.config.margin = header.at("config").at("margin").get<double>();

  for (const auto& e : header.at("entries")) {
    PolarIndex key;
    key.class_label = e.at("class").get<std::string>();
    key.dir_bin = e.at("dir_bin").get<int>();
    key.rot_bin = e.at("rot_bin").get<int>();
    DbEntry entry;
    const auto& md = e.at("mean_dims");
    entry.object.mean_source_dims = {md.at(0).get<double>(), md.at(1).get<double>(), md.at(2).get<double>()};
    entry.object.min_source_dim = e.at("min_source_dim").get<double>();
    for (const auto& pv : e.at("provenance")) {
      entry.provenance.emplace_back(pv.at(0).get<std::string>(), pv.at(1).get<int>());
    }
    const auto count = e.at("count").get<std::size_t>();
    entry.object.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const float x = get_f32(in), y = get_f32(in), z = get_f32(in), intensity = get_f32(in);
      entry.object.points.emplace_back(x, y, z, intensity);
    }
    db.entries.emplace(std::move(key), std::move(entry));
  }
  // declared lengths must consume the stream exactly
  in.peek();
  if (!in.eof()) throw CorruptPayload("db: trailing bytes after declared payloads");
  return db;
}

void save_db_file(const DenseObjectDB& db, const std::string& path, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  save_db(db, out, config_hash);
}

DenseObjectDB load_db_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return load_db(in);
}

bool is_protected_split(const std::string& split_name) {
  std::string s;
  for (char c : split_name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return s == "val" || s == "valid" || s == "validation" || s == "test" || s == "testing";
}

}  // namespace lcfuse
