#pragma once

// Two-phase training: (1) the LiDAR-only assistant on enhanced scenes, whose
// frozen encoder emits the high-quality feature targets; (2) the fusion
// detector on raw scenes, optimized by detection loss plus the
// lambda-weighted feature-supervision loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lcfuse/bev.hpp"
#include "lcfuse/model.hpp"
#include "lcfuse/tensor.hpp"

namespace lcfuse {

struct DivergedLoss : NumericError {
  using NumericError::NumericError;
};

enum class SimLossKind { L2, L1 };

inline std::string to_string(SimLossKind k) { return k == SimLossKind::L2 ? "l2" : "l1"; }
inline SimLossKind sim_loss_from_string(const std::string& s) {
  if (s == "l2") return SimLossKind::L2;
  if (s == "l1") return SimLossKind::L1;
  throw ConfigError("unknown sim loss '" + s + "' (l1|l2)");
}

struct TrainConfig {
  double lambda = 1.0;                          // feature-supervision weight
  SimLossKind sim_loss = SimLossKind::L2;
  Reduction sim_reduction = Reduction::Mean;    // sum switch kept for ablation
  int epochs = 70;
  double lr = 0.001;
  double momentum = 0.9;
  std::uint64_t seed = 3;
  FusionKind fusion = FusionKind::Deep;
  int fusion_depth = 3;
  int fusion_hidden = 0;  // 0 -> c_l + c_c
  double pos_weight = 8.0;
  double reg_weight = 2.0;
};

struct EvalRunConfig {
  EvalConfig metrics = EvalConfig::kitti_defaults();
  double score_threshold = 0.01;
  double nms_iou = 0.3;
  int max_detections = 64;
};

struct EpochLog {
  int epoch = 0;
  double l_det = 0.0;
  double l_sim = 0.0;
  double map_overall = 0.0;
};

template <typename S>
struct TrainSample {
  std::string frame_id;
  Grid<S> pillars_raw;
  Grid<S> pillars_enhanced;  // shape (0,0,0) when the split is not enhanced
  Grid<S> camera;
  DetectionTarget<S> target;
  std::vector<Box3D> gt;

  bool has_enhanced() const { return pillars_enhanced.shape.cells() > 0; }
};

template <typename S>
struct Dataset {
  BevConfig bev;
  std::vector<ClassSpec> classes;
  std::vector<TrainSample<S>> samples;
};

// Pillar grids, camera grid and targets for one scene. Enhanced pillars are
// filled only when the scene carries added sets.
template <typename S>
TrainSample<S> make_sample(const Scene& scene, const BevConfig& bev, const std::vector<ClassSpec>& classes,
                           const CameraConfig& cam) {
  TrainSample<S> s;
  s.frame_id = scene.frame_id;
  s.gt = scene_boxes(scene);
  Scene raw = scene;
  raw.added.clear();
  s.pillars_raw = bev_encode<S>(all_points(raw), bev);
  if (scene.enhanced()) s.pillars_enhanced = bev_encode<S>(all_points(scene), bev);
  s.camera = synth_camera_grid<S>(s.gt, bev, classes, cam, hash_string(scene.frame_id));
  s.target = encode_targets<S>(s.gt, bev);
  return s;
}

// BCE on objectness plus weighted L1 on the regression channels masked to
// positive cells. Center offsets are cell-relative and only meaningful at
// box-center cells; dims and yaw are shared across the footprint.
template <typename S>
Value<S> detection_loss(const Value<S>& head_out, const DetectionTarget<S>& target, S pos_weight,
                        S reg_weight) {
  Value<S> obj = slice_channels(head_out, 0, 1);
  Value<S> off = slice_channels(head_out, 1, 2);
  Value<S> box = slice_channels(head_out, 3, 4);
  Value<S> cls_term = bce_logits(obj, target.objectness, pos_weight);
  Grid<S> off_target{{target.regression.shape.h, target.regression.shape.w, 2},
                     target.regression.data.leftCols(2)};
  Grid<S> box_target{{target.regression.shape.h, target.regression.shape.w, 4},
                     target.regression.data.rightCols(4)};
  Value<S> off_term = masked_l1(off, off_target, target.center_mask);
  Value<S> box_term = masked_l1(box, box_target, target.mask);
  return add(cls_term, scale(add(off_term, box_term), reg_weight));
}

template <typename S>
Value<S> sim_loss(const Value<S>& fused, Conv1x1Layer<S>& psi, const Grid<S>& f_star, SimLossKind kind,
                  Reduction red) {
  Value<S> pred = psi(fused);
  Value<S> target = make_input(f_star);
  return kind == SimLossKind::L2 ? mse(pred, target, red) : l1(pred, target, red);
}

// Graph-free mirror of sim_loss for lambda = 0 logging.
template <typename S>
S sim_loss_plain(const Grid<S>& fused, const Conv1x1Layer<S>& psi, const Grid<S>& f_star, SimLossKind kind,
                 Reduction red) {
  const Grid<S> pred = psi.plain(fused);
  const Mat<S> diff = pred.data - f_star.data;
  const S norm = red == Reduction::Mean ? S(1) / static_cast<S>(pred.shape.size()) : S(1);
  return kind == SimLossKind::L2 ? diff.squaredNorm() * norm : diff.cwiseAbs().sum() * norm;
}

// Frozen assistant encoder plus the BEV fingerprint it was trained with.
template <typename S>
struct AssistantSnapshot {
  LidarEncoder<S> encoder;
  std::uint64_t bev_fingerprint = 0;

  AssistantSnapshot() : encoder(1) {}
  AssistantSnapshot(const LidarEncoder<S>& enc, std::uint64_t fp) : encoder(enc), bev_fingerprint(fp) {}
};

// Forward pass of the frozen encoder; runs outside any graph, so no gradient
// can reach the snapshot.
template <typename S>
Grid<S> high_quality_features(const AssistantSnapshot<S>& snapshot, const Grid<S>& enhanced_pillars,
                              std::uint64_t bev_fingerprint) {
  if (snapshot.bev_fingerprint != bev_fingerprint) {
    throw ConfigMismatch("assistant snapshot was trained with a different BEV configuration");
  }
  return snapshot.encoder.forward_plain(enhanced_pillars);
}

template <typename S>
ApTable evaluate_model(const std::function<Grid<S>(const TrainSample<S>&)>& head_fn, const Dataset<S>& data,
                       const EvalRunConfig& cfg) {
  std::vector<EvalFrame> frames;
  frames.reserve(data.samples.size());
  for (const auto& sample : data.samples) {
    const Grid<S> out = head_fn(sample);
    auto dets = decode_detections(out, data.bev, data.classes, cfg.score_threshold);
    dets = nms_bev(std::move(dets), cfg.nms_iou, static_cast<std::size_t>(cfg.max_detections));
    EvalFrame f;
    f.detections = std::move(dets);
    f.ground_truth = sample.gt;
    frames.push_back(std::move(f));
  }
  return evaluate_detections(frames, cfg.metrics);
}

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed, 0x5u + static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline void check_finite_loss(double v, const std::string& what) {
  if (!std::isfinite(v)) throw DivergedLoss(what + " is not finite");
}

}  // namespace detail

template <typename S>
struct AssistantTrainResult {
  LidarDetector<S> model;
  AssistantSnapshot<S> snapshot;
  std::vector<EpochLog> logs;

  explicit AssistantTrainResult(int c_l) : model(c_l), snapshot() {}
};

// LiDAR-branch training. use_enhanced selects the enhanced pillar grids for
// both optimization and the per-epoch validation metric (the raw variant is
// the sparse baseline arm).
template <typename S>
AssistantTrainResult<S> train_assistant(const Dataset<S>& train, const Dataset<S>& val, const TrainConfig& cfg,
                                        const EvalRunConfig& eval_cfg, bool use_enhanced = true) {
  const auto pillars_of = [use_enhanced](const TrainSample<S>& s) -> const Grid<S>& {
    if (use_enhanced && !s.has_enhanced()) throw DataError("sample " + s.frame_id + " has no enhanced pillars");
    return use_enhanced ? s.pillars_enhanced : s.pillars_raw;
  };

  AssistantTrainResult<S> result(train.bev.lidar_channels);
  LidarDetector<S>& model = result.model;
  model.init(cfg.seed);
  auto params = model.params();
  SgdOptimizer<S> opt(static_cast<S>(cfg.lr), static_cast<S>(cfg.momentum));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double det_total = 0.0;
    const auto order = detail::epoch_order(train.samples.size(), cfg.seed, epoch);
    for (const std::size_t si : order) {
      const TrainSample<S>& sample = train.samples[si];
      zero_grads(params);
      Value<S> out = model.forward(make_input(pillars_of(sample)));
      Value<S> loss = detection_loss(out, sample.target, static_cast<S>(cfg.pos_weight),
                                     static_cast<S>(cfg.reg_weight));
      const double lv = static_cast<double>(loss.scalar_value());
      detail::check_finite_loss(lv, "assistant detection loss");
      det_total += lv;
      backward(loss);
      opt.step(params);
    }
    EpochLog log;
    log.epoch = epoch;
    log.l_det = det_total / std::max<std::size_t>(1, train.samples.size());
    log.l_sim = 0.0;
    log.map_overall = evaluate_model<S>(
        [&](const TrainSample<S>& s) { return model.forward_plain(pillars_of(s)); }, val, eval_cfg).overall;
    result.logs.push_back(log);
  }
  result.snapshot = AssistantSnapshot<S>(model.encoder, train.bev.fingerprint());
  return result;
}

template <typename S>
struct FusionTrainResult {
  FusionDetector<S> model;
  std::vector<EpochLog> logs;

  FusionTrainResult(int c_l, int c_c, FusionKind kind, int depth, int hidden)
      : model(c_l, c_c, kind, depth, hidden) {}
};

// Student training on raw scenes + camera features. The supervision target
// f* is recomputed per scene from the frozen snapshot; with lambda = 0 the
// mimic loss is evaluated outside the graph (logged, no gradient).
template <typename S>
FusionTrainResult<S> train_fusion(const Dataset<S>& train, const Dataset<S>& val,
                                  const AssistantSnapshot<S>& snapshot, const TrainConfig& cfg,
                                  const EvalRunConfig& eval_cfg) {
  if (snapshot.bev_fingerprint != train.bev.fingerprint()) {
    throw ConfigMismatch("assistant snapshot does not match the training BEV configuration");
  }
  FusionTrainResult<S> result(train.bev.lidar_channels, train.bev.camera_channels, cfg.fusion,
                              cfg.fusion_depth, cfg.fusion_hidden);
  FusionDetector<S>& model = result.model;
  model.init(cfg.seed);
  auto params = model.params();
  SgdOptimizer<S> opt(static_cast<S>(cfg.lr), static_cast<S>(cfg.momentum));
  const std::uint64_t fp = train.bev.fingerprint();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double det_total = 0.0, sim_total = 0.0;
    const auto order = detail::epoch_order(train.samples.size(), cfg.seed, epoch);
    for (const std::size_t si : order) {
      const TrainSample<S>& sample = train.samples[si];
      if (!sample.has_enhanced()) {
        throw DataError("sample " + sample.frame_id + " has no enhanced pillars for f*");
      }
      const Grid<S> f_star = high_quality_features(snapshot, sample.pillars_enhanced, fp);
      zero_grads(params);
      auto [fused, out] = model.forward(make_input(sample.pillars_raw), make_input(sample.camera));
      Value<S> det = detection_loss(out, sample.target, static_cast<S>(cfg.pos_weight),
                                    static_cast<S>(cfg.reg_weight));
      double sim_value;
      Value<S> loss;
      if (cfg.lambda > 0.0) {
        Value<S> sim = sim_loss(fused, model.psi, f_star, cfg.sim_loss, cfg.sim_reduction);
        sim_value = static_cast<double>(sim.scalar_value());
        loss = add(det, scale(sim, static_cast<S>(cfg.lambda)));
      } else {
        sim_value = static_cast<double>(
            sim_loss_plain(fused.val(), model.psi, f_star, cfg.sim_loss, cfg.sim_reduction));
        loss = det;
      }
      const double lv = static_cast<double>(loss.scalar_value());
      detail::check_finite_loss(lv, "fusion loss");
      detail::check_finite_loss(sim_value, "sim loss");
      det_total += static_cast<double>(det.scalar_value());
      sim_total += sim_value;
      backward(loss);
      opt.step(params);
    }
    EpochLog log;
    log.epoch = epoch;
    log.l_det = det_total / std::max<std::size_t>(1, train.samples.size());
    log.l_sim = sim_total / std::max<std::size_t>(1, train.samples.size());
    log.map_overall = evaluate_model<S>(
        [&](const TrainSample<S>& s) { return model.forward_plain(s.pillars_raw, s.camera); }, val,
        eval_cfg).overall;
    result.logs.push_back(log);
  }
  return result;
}

}  // namespace lcfuse
