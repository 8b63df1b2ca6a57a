#pragma once

// Tensor container: a JSON meta header plus named little-endian f32 tensors.
// Used for checkpoints, camera feature grids, and metrics logs.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcfuse/tensor.hpp"

namespace lcfuse {

struct TensorFile {
  nlohmann::json meta = nlohmann::json::object();
  // name -> (dims, payload); ordered by name for stable bytes
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> tensors;

  bool has(const std::string& name) const { return tensors.count(name) != 0; }
};

void save_tensor_file(const TensorFile& tf, const std::filesystem::path& path);
TensorFile load_tensor_file(const std::filesystem::path& path);

template <typename S>
void store_params(TensorFile& tf, const std::vector<Param<S>*>& params) {
  for (const auto* p : params) {
    std::vector<int> dims{static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols())};
    std::vector<float> data(static_cast<std::size_t>(p->value.size()));
    for (long k = 0; k < p->value.size(); ++k) data[static_cast<std::size_t>(k)] = static_cast<float>(p->value.data()[k]);
    tf.tensors[p->name] = {std::move(dims), std::move(data)};
  }
}

template <typename S>
void load_params_into(const TensorFile& tf, const std::vector<Param<S>*>& params) {
  for (auto* p : params) {
    auto it = tf.tensors.find(p->name);
    if (it == tf.tensors.end()) throw DataError("checkpoint: missing tensor " + p->name);
    const auto& [dims, data] = it->second;
    if (dims.size() != 2 || dims[0] != p->value.rows() || dims[1] != p->value.cols()) {
      throw DataError("checkpoint: tensor " + p->name + " has wrong shape");
    }
    for (long k = 0; k < p->value.size(); ++k) p->value.data()[k] = static_cast<S>(data[static_cast<std::size_t>(k)]);
  }
}

template <typename S>
void store_grid(TensorFile& tf, const std::string& name, const Grid<S>& g) {
  std::vector<int> dims{g.shape.h, g.shape.w, g.shape.c};
  std::vector<float> data(static_cast<std::size_t>(g.data.size()));
  for (long k = 0; k < g.data.size(); ++k) data[static_cast<std::size_t>(k)] = static_cast<float>(g.data.data()[k]);
  tf.tensors[name] = {std::move(dims), std::move(data)};
}

template <typename S>
Grid<S> load_grid(const TensorFile& tf, const std::string& name) {
  auto it = tf.tensors.find(name);
  if (it == tf.tensors.end()) throw DataError("tensor file: missing tensor " + name);
  const auto& [dims, data] = it->second;
  if (dims.size() != 3) throw DataError("tensor " + name + " is not a (h,w,c) grid");
  Grid<S> g = Grid<S>::zeros(dims[0], dims[1], dims[2]);
  if (static_cast<long>(data.size()) != g.data.size()) throw DataError("tensor " + name + ": payload size");
  for (long k = 0; k < g.data.size(); ++k) g.data.data()[k] = static_cast<S>(data[static_cast<std::size_t>(k)]);
  return g;
}

}  // namespace lcfuse
