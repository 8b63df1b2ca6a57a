#pragma once

// Model zoo: BEV LiDAR encoder, the sum/concat/deep fusion modules behind one
// interface, the kernel-1 projection psi, and the anchor-free per-cell
// detection head. Every module offers the graph-building forward used in
// training and a plain (no-autograd) forward for evaluation and frozen
// feature extraction.

#include <cmath>
#include <string>
#include <vector>

#include "lcfuse/bev.hpp"
#include "lcfuse/tensor.hpp"

namespace lcfuse {

template <typename S>
struct Conv1x1Layer {
  Param<S> w, b;

  Conv1x1Layer(const std::string& name, int cin, int cout) : w(name + ".w", cin, cout), b(name + ".b", 1, cout) {}

  int in_channels() const { return static_cast<int>(w.value.rows()); }
  int out_channels() const { return static_cast<int>(w.value.cols()); }

  // He-uniform weights, slightly positive bias (keeps relu units alive
  // through the early all-negative objectness pressure); stream keyed by
  // (seed, param name) so the result does not depend on initialization order.
  void init(std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, hash_string(w.name)));
    const double limit = std::sqrt(6.0 / static_cast<double>(w.value.rows()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (long k = 0; k < w.value.size(); ++k) w.value.data()[k] = static_cast<S>(dist(rng));
    b.value.setConstant(S(0.1));
  }

  void init_identity() {
    w.value.setZero();
    const long n = std::min(w.value.rows(), w.value.cols());
    for (long i = 0; i < n; ++i) w.value(i, i) = S(1);
    b.value.setZero();
  }

  Value<S> operator()(const Value<S>& x) { return conv1x1(x, &w, &b); }

  Grid<S> plain(const Grid<S>& x) const {
    return Grid<S>{{x.shape.h, x.shape.w, out_channels()}, (x.data * w.value).rowwise() + b.value.row(0)};
  }

  void collect(std::vector<Param<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
Grid<S> relu_plain(Grid<S> g) {
  g.data = g.data.cwiseMax(S(0));
  return g;
}

template <typename S>
Grid<S> sigmoid_plain(Grid<S> g) {
  g.data = ((-g.data.array()).exp() + S(1)).inverse().matrix();
  return g;
}

// Three kernel-1 conv+relu stages over the pillar grid.
template <typename S>
struct LidarEncoder {
  Conv1x1Layer<S> l1, l2, l3;

  explicit LidarEncoder(int c_out, const std::string& prefix = "encoder")
      : l1(prefix + ".l1", kPillarChannels, c_out),
        l2(prefix + ".l2", c_out, c_out),
        l3(prefix + ".l3", c_out, c_out) {}

  int out_channels() const { return l3.out_channels(); }

  void init(std::uint64_t seed) {
    l1.init(seed);
    l2.init(seed);
    l3.init(seed);
  }

  Value<S> forward(const Value<S>& pillars) { return relu(l3(relu(l2(relu(l1(pillars)))))); }

  Grid<S> forward_plain(const Grid<S>& pillars) const {
    return relu_plain(l3.plain(relu_plain(l2.plain(relu_plain(l1.plain(pillars))))));
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    l1.collect(out);
    l2.collect(out);
    l3.collect(out);
    return out;
  }
};

enum class FusionKind { Sum, Concat, Deep };

inline std::string to_string(FusionKind k) {
  switch (k) {
    case FusionKind::Sum: return "sum";
    case FusionKind::Concat: return "concat";
    case FusionKind::Deep: return "deep";
  }
  return "deep";
}

inline FusionKind fusion_kind_from_string(const std::string& s) {
  if (s == "sum") return FusionKind::Sum;
  if (s == "concat") return FusionKind::Concat;
  if (s == "deep") return FusionKind::Deep;
  throw ConfigError("unknown fusion kind '" + s + "' (sum|concat|deep)");
}

// One interface for the three fusion strategies; all take (f_l, f_c) and
// return C_l channels, so they substitute for each other by config alone.
//
// Deep: g = conv(f_l); h = K conv+relu blocks over concat(g, f_c);
// out = f_l + sigmoid(conv_gate(h)) .* conv_proj(h).
template <typename S>
class FusionModule {
 public:
  FusionModule(FusionKind kind, int c_l, int c_c, int depth = 3, int hidden = 0,
               const std::string& prefix = "fusion")
      : kind_(kind), c_l_(c_l), c_c_(c_c), depth_(depth), hidden_(hidden > 0 ? hidden : c_l + c_c) {
    if (depth_ < 1) throw ConfigError("fusion depth must be >= 1");
    switch (kind_) {
      case FusionKind::Sum:
        layers_.emplace_back(prefix + ".cam_proj", c_c_, c_l_);
        break;
      case FusionKind::Concat:
        layers_.emplace_back(prefix + ".mix", c_l_ + c_c_, c_l_);
        break;
      case FusionKind::Deep:
        layers_.emplace_back(prefix + ".learner3d", c_l_, c_l_);
        layers_.emplace_back(prefix + ".block0", c_l_ + c_c_, hidden_);
        for (int i = 1; i < depth_; ++i) {
          layers_.emplace_back(prefix + ".block" + std::to_string(i), hidden_, hidden_);
        }
        layers_.emplace_back(prefix + ".proj", hidden_, c_l_);
        layers_.emplace_back(prefix + ".gate", hidden_, c_l_);
        break;
    }
  }

  FusionKind kind() const { return kind_; }
  int depth() const { return depth_; }
  int hidden() const { return hidden_; }
  Conv1x1Layer<S>& gate_layer() { return layers_.back(); }

  void init(std::uint64_t seed) {
    for (auto& l : layers_) l.init(seed);
  }

  Value<S> forward(const Value<S>& f_l, const Value<S>& f_c) {
    check_channels(f_l.shape().c, f_c.shape().c);
    switch (kind_) {
      case FusionKind::Sum:
        return add(f_l, layers_[0](f_c));
      case FusionKind::Concat:
        return layers_[0](concat_channels(f_l, f_c));
      case FusionKind::Deep: {
        Value<S> h = concat_channels(layers_[0](f_l), f_c);
        for (int i = 0; i < depth_; ++i) h = relu(layers_[static_cast<std::size_t>(1 + i)](h));
        Value<S> p = layers_[layers_.size() - 2](h);
        Value<S> gate = sigmoid(layers_.back()(h));
        return add(f_l, mul(gate, p));
      }
    }
    throw Error("unreachable fusion kind");
  }

  Grid<S> forward_plain(const Grid<S>& f_l, const Grid<S>& f_c) const {
    check_channels(f_l.shape.c, f_c.shape.c);
    switch (kind_) {
      case FusionKind::Sum: {
        Grid<S> out = layers_[0].plain(f_c);
        out.data += f_l.data;
        return out;
      }
      case FusionKind::Concat: {
        Mat<S> d(f_l.shape.cells(), c_l_ + c_c_);
        d.leftCols(c_l_) = f_l.data;
        d.rightCols(c_c_) = f_c.data;
        return layers_[0].plain(Grid<S>{{f_l.shape.h, f_l.shape.w, c_l_ + c_c_}, std::move(d)});
      }
      case FusionKind::Deep: {
        Grid<S> g = layers_[0].plain(f_l);
        Mat<S> d(f_l.shape.cells(), c_l_ + c_c_);
        d.leftCols(c_l_) = g.data;
        d.rightCols(c_c_) = f_c.data;
        Grid<S> h{{f_l.shape.h, f_l.shape.w, c_l_ + c_c_}, std::move(d)};
        for (int i = 0; i < depth_; ++i) h = relu_plain(layers_[static_cast<std::size_t>(1 + i)].plain(h));
        Grid<S> p = layers_[layers_.size() - 2].plain(h);
        Grid<S> gate = sigmoid_plain(layers_.back().plain(h));
        Grid<S> out = f_l;
        out.data += gate.data.cwiseProduct(p.data);
        return out;
      }
    }
    throw Error("unreachable fusion kind");
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto& l : layers_) l.collect(out);
    return out;
  }

 private:
  void check_channels(int cl, int cc) const {
    if (cl != c_l_ || cc != c_c_) {
      throw ShapeMismatch("fusion: got channels (" + std::to_string(cl) + "," + std::to_string(cc) +
                          "), configured (" + std::to_string(c_l_) + "," + std::to_string(c_c_) + ")");
    }
  }

  FusionKind kind_;
  int c_l_, c_c_, depth_, hidden_;
  std::vector<Conv1x1Layer<S>> layers_;
};

// conv+relu then a 7-channel projection per cell.
template <typename S>
struct DetectionHead {
  Conv1x1Layer<S> h1, h2;

  explicit DetectionHead(int c_in, const std::string& prefix = "head")
      : h1(prefix + ".h1", c_in, c_in), h2(prefix + ".h2", c_in, kHeadChannels) {}

  void init(std::uint64_t seed) {
    h1.init(seed);
    h2.init(seed);
  }

  Value<S> forward(const Value<S>& f) { return h2(relu(h1(f))); }
  Grid<S> forward_plain(const Grid<S>& f) const { return h2.plain(relu_plain(h1.plain(f))); }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    h1.collect(out);
    h2.collect(out);
    return out;
  }
};

// LiDAR-only detector (the assistant architecture).
template <typename S>
struct LidarDetector {
  LidarEncoder<S> encoder;
  DetectionHead<S> head;

  explicit LidarDetector(int c_l) : encoder(c_l), head(c_l) {}

  void init(std::uint64_t seed) {
    encoder.init(seed);
    head.init(seed);
  }

  Value<S> forward(const Value<S>& pillars) { return head.forward(encoder.forward(pillars)); }
  Grid<S> forward_plain(const Grid<S>& pillars) const {
    return head.forward_plain(encoder.forward_plain(pillars));
  }

  std::vector<Param<S>*> params() {
    auto out = encoder.params();
    for (auto* p : head.params()) out.push_back(p);
    return out;
  }
};

// LiDAR-camera detector: encoder + fusion + head, plus the psi projection
// used only by the feature-supervision loss. psi starts at identity.
template <typename S>
struct FusionDetector {
  LidarEncoder<S> encoder;
  FusionModule<S> fusion;
  DetectionHead<S> head;
  Conv1x1Layer<S> psi;

  FusionDetector(int c_l, int c_c, FusionKind kind, int depth = 3, int hidden = 0)
      : encoder(c_l), fusion(kind, c_l, c_c, depth, hidden), head(c_l), psi("psi", c_l, c_l) {}

  void init(std::uint64_t seed) {
    encoder.init(seed);
    fusion.init(seed);
    head.init(seed);
    psi.init_identity();
  }

  // (fusion feature, head output)
  std::pair<Value<S>, Value<S>> forward(const Value<S>& pillars, const Value<S>& camera) {
    Value<S> f_l = encoder.forward(pillars);
    Value<S> f_lc = fusion.forward(f_l, camera);
    return {f_lc, head.forward(f_lc)};
  }

  Grid<S> fused_plain(const Grid<S>& pillars, const Grid<S>& camera) const {
    return fusion.forward_plain(encoder.forward_plain(pillars), camera);
  }
  Grid<S> forward_plain(const Grid<S>& pillars, const Grid<S>& camera) const {
    return head.forward_plain(fused_plain(pillars, camera));
  }

  std::vector<Param<S>*> params() {
    auto out = encoder.params();
    for (auto* p : fusion.params()) out.push_back(p);
    for (auto* p : head.params()) out.push_back(p);
    psi.collect(out);
    return out;
  }
};

}  // namespace lcfuse
