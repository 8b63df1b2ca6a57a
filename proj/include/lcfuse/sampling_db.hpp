#pragma once

// Polar grouping: bin training objects by (class, direction bin, rotation
// bin), fuse the densest k per bin into one canonical dense object, and
// persist the result as the pasting database.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lcfuse/geometry.hpp"

namespace lcfuse {

struct EmptyObject : DataError {
  using DataError::DataError;
};
struct BadMagic : DataError {
  using DataError::DataError;
};
struct VersionMismatch : DataError {
  using DataError::DataError;
};
struct CorruptPayload : DataError {
  using DataError::DataError;
};

struct DbConfig {
  int n_bins = 8;        // bins per angle axis
  int k_densest = 10;    // objects fused per bin
  int max_points = 5000; // subsample cap per canonical object
  std::uint64_t seed = 0;
  double margin = 0.25;  // crop margin, meters
};

// Dims-normalized object: points in the unit canonical box, excursions up to
// margin/min_source_dim outside of it from the crop margin.
struct CanonicalObject {
  std::vector<Point3> points;
  Eigen::Vector3d mean_source_dims{0, 0, 0};
  double min_source_dim = 0.0;
};

struct DbEntry {
  CanonicalObject object;
  std::vector<std::pair<std::string, int>> provenance;  // (frame id, object index)
};

struct DenseObjectDB {
  DbConfig config;
  std::map<PolarIndex, DbEntry> entries;

  bool has_class(const std::string& cls) const;
};

// to_local then per-axis division by (l, w, h); intensity preserved.
CanonicalObject canonicalize(const ObjectPoints& obj);

// Re-instantiate a canonical object into a target box.
std::vector<Point3> decanonicalize(const CanonicalObject& canon, const Box3D& box, double intensity);

DenseObjectDB build_database(const std::vector<Scene>& scenes, const DbConfig& cfg);

// Container: magic "PSDB", u16 version, length-prefixed JSON header, then
// per-entry little-endian f32 (x,y,z,intensity) payloads.
void save_db(const DenseObjectDB& db, std::ostream& out, const std::string& config_hash = {});
DenseObjectDB load_db(std::istream& in);
void save_db_file(const DenseObjectDB& db, const std::string& path, const std::string& config_hash = {});
DenseObjectDB load_db_file(const std::string& path);

// Split names that must never feed the database build.
bool is_protected_split(const std::string& split_name);

}  // namespace lcfuse
