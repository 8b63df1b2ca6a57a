#pragma once

// Flat key=value run configuration: defaults, optional file, then flag
// overrides (flags win). Keys mirror the module config structs one-to-one;
// unknown keys are fatal. The canonical serialization hashes into the id
// embedded in every artifact.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lcfuse/bev.hpp"
#include "lcfuse/metrics.hpp"
#include "lcfuse/sampling_db.hpp"
#include "lcfuse/simulator.hpp"
#include "lcfuse/training.hpp"

namespace lcfuse {

class Config {
 public:
  Config();  // defaults only

  static Config load(const std::filesystem::path& file_or_empty,
                     const std::vector<std::string>& overrides = {});

  void set(const std::string& key, const std::string& value);  // validates key

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  std::string canonical() const;
  std::string hash() const;  // fnv1a64 hex of canonical()
  void write_resolved(const std::filesystem::path& path) const;

  std::vector<ClassSpec> classes() const;
  SimConfig sim() const;
  BevConfig bev() const;
  DbConfig db() const;
  CameraConfig camera() const;
  TrainConfig train() const;
  EvalRunConfig eval_run() const;

 private:
  bool known_key(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace lcfuse
