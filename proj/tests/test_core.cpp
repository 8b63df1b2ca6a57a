#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "lcfuse/geometry.hpp"
#include "lcfuse/kitti.hpp"
#include "lcfuse/metrics.hpp"

using namespace lcfuse;

namespace {

constexpr double kPi = std::numbers::pi;

Box3D make_box(double x, double y, double z, double l, double w, double h, double yaw,
               const std::string& cls = "Car") {
  Box3D b;
  b.center = {x, y, z};
  b.dims = {l, w, h};
  b.yaw = yaw;
  b.class_label = cls;
  return b;
}

}  // namespace

TEST_CASE("direction_angle basics") {
  CHECK(direction_angle(make_box(10, 0, -1, 1, 1, 1, 0)) == doctest::Approx(0.0));
  CHECK(direction_angle(make_box(0, 5, 0, 1, 1, 1, 0)) == doctest::Approx(kPi / 2));
  CHECK(direction_angle(make_box(-3, -3, 0, 1, 1, 1, 0)) == doctest::Approx(5 * kPi / 4));
  CHECK_THROWS_AS(direction_angle(make_box(0, 0, 3, 1, 1, 1, 0)), DegenerateCenter);
}

TEST_CASE("direction_angle ignores z") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), y = u(rng);
    if (x == 0 && y == 0) continue;
    const double a0 = direction_angle(make_box(x, y, 0, 1, 1, 1, 0));
    const double a1 = direction_angle(make_box(x, y, u(rng), 1, 1, 1, 0));
    CHECK(a0 == doctest::Approx(a1));
  }
}

TEST_CASE("rotation_angle normalization") {
  CHECK(rotation_angle(make_box(1, 0, 0, 1, 1, 1, 0.0)) == doctest::Approx(0.0));
  CHECK(rotation_angle(make_box(1, 0, 0, 1, 1, 1, -kPi / 2)) == doctest::Approx(3 * kPi / 2));
  CHECK(rotation_angle(make_box(1, 0, 0, 1, 1, 1, 7 * kPi / 2)) == doctest::Approx(3 * kPi / 2));
}

TEST_CASE("group_index bins") {
  auto idx = group_index(0.0, 0.0, "Car", 8);
  CHECK(idx.dir_bin == 0);
  CHECK(idx.rot_bin == 0);
  idx = group_index(kPi, 3 * kPi / 2, "Car", 8);
  CHECK(idx.dir_bin == 4);
  CHECK(idx.rot_bin == 6);
  idx = group_index(kTwoPi - 1e-9, 0.0, "Car", 8);
  CHECK(idx.dir_bin == 7);
  CHECK(idx.rot_bin == 0);
}

TEST_CASE("group_index properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (const int n : {1, 3, 8, 16}) {
    for (int i = 0; i < 100; ++i) {
      const auto idx = group_index(u(rng), u(rng), "X", n);
      CHECK(idx.dir_bin >= 0);
      CHECK(idx.dir_bin < n);
      CHECK(idx.rot_bin >= 0);
      CHECK(idx.rot_bin < n);
      if (n == 1) {
        CHECK(idx.dir_bin == 0);
        CHECK(idx.rot_bin == 0);
      }
    }
  }
  // rotating the center by 2pi/N advances dir_bin by 1 mod N
  const int n = 8;
  std::uniform_real_distribution<double> radius(1.0, 40.0);
  for (int i = 0; i < 60; ++i) {
    const double a = u(rng);
    if (std::abs(a * n / kTwoPi - std::round(a * n / kTwoPi)) < 1e-6) continue;  // bin boundary
    const double r = radius(rng);
    const auto before = group_index(make_box(r * std::cos(a), r * std::sin(a), 0, 1, 1, 1, 0, "X"), n);
    const double a2 = a + kTwoPi / n;
    const auto after = group_index(make_box(r * std::cos(a2), r * std::sin(a2), 0, 1, 1, 1, 0, "X"), n);
    CHECK(after.dir_bin == (before.dir_bin + 1) % n);
  }
}

TEST_CASE("to_local and to_global") {
  const Box3D box = make_box(2, -1, 3, 4, 2, 2, kPi / 2);
  const Point3 at_center(box.center, 0.7);
  const Point3 local = to_local(at_center, box);
  CHECK(local.xyz.norm() == doctest::Approx(0.0));
  CHECK(local.intensity == doctest::Approx(0.7));

  const Point3 above(box.center + Eigen::Vector3d(0, 1, 0), 0.0);
  const Point3 l2 = to_local(above, box);
  CHECK(l2.xyz.x() == doctest::Approx(1.0));
  CHECK(l2.xyz.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l2.xyz.z() == doctest::Approx(0.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> ua(0, kTwoPi);
  for (int i = 0; i < 200; ++i) {
    const Box3D b = make_box(u(rng), u(rng), u(rng), 3, 2, 1.5, ua(rng));
    const Point3 p(u(rng), u(rng), u(rng), 0.5);
    const Point3 rt = to_global(to_local(p, b), b);
    CHECK((rt.xyz - p.xyz).norm() < 1e-6);
  }
}

TEST_CASE("velodyne read/write") {
  std::vector<Point3> pts = {{1, 2, 3, 0.5}, {-1, 0, 2, 0.0}};
  const auto bytes = write_velodyne(pts);
  CHECK(bytes.size() == 32);
  const auto back = read_velodyne(bytes);
  REQUIRE(back.size() == 2);
  CHECK(back[0].xyz.x() == doctest::Approx(1));
  CHECK(back[0].intensity == doctest::Approx(0.5));
  CHECK(back[1].xyz.z() == doctest::Approx(2));

  CHECK(read_velodyne({}).empty());
  std::vector<std::byte> bad(17);
  CHECK_THROWS_AS(read_velodyne(bad), TruncatedFile);
}

TEST_CASE("velodyne round-trip is bit-exact") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> u(-80.f, 80.f);
  std::uniform_real_distribution<float> ui(0.f, 1.f);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng), u(rng), ui(rng));
  const auto bytes = write_velodyne(pts);
  const auto back = read_velodyne(bytes);
  const auto bytes2 = write_velodyne(back);
  CHECK(bytes == bytes2);
}

TEST_CASE("velodyne rejects non-finite and clamps intensity") {
  std::vector<Point3> pts = {{1, 2, 3, 2.5}};
  std::size_t clamped = 0;
  const auto back = read_velodyne(write_velodyne(pts), &clamped);
  CHECK(clamped == 1);
  CHECK(back[0].intensity == doctest::Approx(1.0));

  auto bytes = write_velodyne({{1, 2, 3, 0.5}});
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data(), &nan, 4);
  CHECK_THROWS_AS(read_velodyne(bytes), NonFiniteValue);
}

TEST_CASE("label parsing and conversion") {
  // identity extrinsics: cam frame == velo axes; bottom at (0,0,10), h=w=l=2
  const std::string text = "Car 0.0 0 0.0 0 0 50 50 2.0 2.0 2.0 0.0 0.0 10.0 0.0\n";
  const auto boxes = read_labels(text, CalibMatrices::identity());
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].dims.x() == doctest::Approx(2.0));
  CHECK(boxes[0].dims.y() == doctest::Approx(2.0));
  CHECK(boxes[0].dims.z() == doctest::Approx(2.0));
  // bottom-face center lifted by h/2 along velo z
  CHECK(boxes[0].center.x() == doctest::Approx(0.0));
  CHECK(boxes[0].center.y() == doctest::Approx(0.0));
  CHECK(boxes[0].center.z() == doctest::Approx(11.0));
  CHECK(boxes[0].yaw == doctest::Approx(3 * kPi / 2));  // -ry - pi/2 normalized

  CHECK(read_labels("DontCare 0 0 0 0 0 50 50 1 1 1 0 0 10 0\n", CalibMatrices::identity()).empty());
  CHECK_THROWS_AS(read_labels("Car 0.0 0 0.0 0 0 50 50 2.0 2.0 2.0 0.0 0.0 10.0\n", CalibMatrices::identity()),
                  MalformedLine);
}

TEST_CASE("label writer round-trips through the reader") {
  const auto calib = CalibMatrices::synthetic();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(5, 35);
  std::uniform_real_distribution<double> ua(0, kTwoPi);
  std::vector<Box3D> boxes;
  for (int i = 0; i < 20; ++i) {
    boxes.push_back(make_box(u(rng), u(rng) - 20, 0.8, 4.0, 1.8, 1.5, ua(rng), i % 2 ? "Car" : "Pedestrian"));
  }
  const auto back = read_labels(write_labels(boxes, calib), calib);
  REQUIRE(back.size() == boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    CHECK((back[i].center - boxes[i].center).norm() < 1e-4);
    CHECK((back[i].dims - boxes[i].dims).norm() < 1e-4);
    CHECK(std::abs(normalize_angle(back[i].yaw - boxes[i].yaw + kPi) - kPi) < 1e-4);
    CHECK(back[i].class_label == boxes[i].class_label);
  }
}

TEST_CASE("calib parsing") {
  const auto calib = CalibMatrices::synthetic();
  const auto back = read_calib(write_calib(calib));
  CHECK((back.tr_velo_to_cam - calib.tr_velo_to_cam).norm() == doctest::Approx(0.0));
  CHECK((back.r0_rect - calib.r0_rect).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(read_calib("R0_rect: 1 0 0 0 1 0 0 0 1\n"), DataError);  // no Tr
}

TEST_CASE("crop_objects") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);

  SUBCASE("no boxes") {
    std::vector<Point3> pts = {{1, 2, 3, 0}, {4, 5, 6, 0}};
    const Scene s = crop_objects(pts, {}, 0.25);
    CHECK(s.objects.empty());
    CHECK(s.background.size() == 2);
  }

  SUBCASE("point at box center") {
    const Box3D b = make_box(3, 4, 0, 2, 2, 2, 0.3);
    const Scene s = crop_objects({{3, 4, 0, 0.1}}, {b}, 0.25);
    REQUIRE(s.objects.size() == 1);
    CHECK(s.objects[0].points.size() == 1);
    CHECK(s.background.empty());
  }

  SUBCASE("matches brute-force membership and partitions") {
    std::vector<Box3D> boxes = {make_box(u(rng), u(rng), 0, 4, 2, 2, 0.5),
                                make_box(u(rng), u(rng), 0, 2, 2, 2, 1.2),
                                make_box(u(rng), u(rng), 0, 1, 1, 2, 4.0)};
    std::vector<Point3> pts;
    for (int i = 0; i < 100; ++i) pts.emplace_back(u(rng), u(rng), u(rng) * 0.2, 0.5);
    const double margin = 0.25;
    const Scene s = crop_objects(pts, boxes, margin);
    std::size_t total = s.background.size();
    for (const auto& o : s.objects) total += o.points.size();
    CHECK(total == pts.size());
    // brute force: first box whose expanded volume contains the point
    std::size_t cursor[3] = {0, 0, 0};
    std::size_t bg_cursor = 0;
    for (const auto& p : pts) {
      int want = -1;
      for (int bi = 0; bi < 3 && want < 0; ++bi) {
        if (point_in_box(p, boxes[static_cast<std::size_t>(bi)], margin)) want = bi;
      }
      if (want < 0) {
        REQUIRE(bg_cursor < s.background.size());
        CHECK(s.background[bg_cursor++].xyz == p.xyz);
      } else {
        auto& k = cursor[want];
        REQUIRE(k < s.objects[static_cast<std::size_t>(want)].points.size());
        CHECK(s.objects[static_cast<std::size_t>(want)].points[k++].xyz == p.xyz);
      }
    }
  }
}

TEST_CASE("ply export") {
  const std::string one = write_ply({{1, 2, 3, 0}});
  CHECK(one.find("element vertex 1") != std::string::npos);
  CHECK(one.find("1.000000 2.000000 3.000000 0 0 0") != std::string::npos);
  const std::string empty = write_ply({});
  CHECK(empty.find("element vertex 0") != std::string::npos);
  CHECK(empty.find("end_header") != std::string::npos);

  Scene s;
  s.objects.push_back({make_box(0, 0, 0, 1, 1, 1, 0), {{0, 0, 0, 0.5}}, "f", 0});
  s.added.push_back({{{0.1, 0.1, 0.1, 0.5}}});
  const std::string ply = write_scene_ply(s);
  CHECK(ply.find("255 64 255") != std::string::npos);  // added points magenta
  CHECK(ply.find("0 0 0") != std::string::npos);       // raw points black
}

TEST_CASE("bev_iou analytic cases") {
  const Box3D a = make_box(0, 0, 0, 1, 1, 1, 0);
  CHECK(bev_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bev_iou(a, make_box(5, 5, 0, 1, 1, 1, 0)) == doctest::Approx(0.0));
  CHECK(bev_iou(a, make_box(0.5, 0, 0, 1, 1, 1, 0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  // half overlap in both axes: inter 0.25, union 1.75
  CHECK(bev_iou(a, make_box(0.5, 0.5, 0, 1, 1, 1, 0)) == doctest::Approx(0.25 / 1.75).epsilon(1e-9));
  // rotated 45 deg concentric unit squares: inter = 2*(sqrt(2)-1)^2... use known value
  const double inter_rot = 2.0 * (std::sqrt(2.0) - 1.0);  // octagon area for unit squares
  CHECK(bev_iou(a, make_box(0, 0, 0, 1, 1, 1, kPi / 4)) ==
        doctest::Approx(inter_rot / (2.0 - inter_rot)).epsilon(1e-9));
  // containment: small box inside big box
  CHECK(bev_iou(make_box(0, 0, 0, 4, 4, 1, 0.7), make_box(0, 0, 0, 2, 2, 1, 0.7)) ==
        doctest::Approx(0.25).epsilon(1e-9));
  // touching edge-to-edge: zero overlap
  CHECK(bev_iou(a, make_box(1.0, 0, 0, 1, 1, 1, 0)) == doctest::Approx(0.0).epsilon(1e-9));
  // same box rotated by pi (symmetric rectangle)
  CHECK(bev_iou(make_box(2, 3, 0, 4, 2, 1, 0.3), make_box(2, 3, 0, 4, 2, 1, 0.3 + kPi)) ==
        doctest::Approx(1.0).epsilon(1e-9));
  // thin sliver crossing: 10x0.2 crossed at 90 deg -> inter 0.04, union 2*2-0.04
  CHECK(bev_iou(make_box(0, 0, 0, 10, 0.2, 1, 0), make_box(0, 0, 0, 10, 0.2, 1, kPi / 2)) ==
        doctest::Approx(0.04 / (4.0 - 0.04)).epsilon(1e-9));
  // quarter overlap of 2x2 squares offset diagonally by 1
  CHECK(bev_iou(make_box(0, 0, 0, 2, 2, 1, 0), make_box(1, 1, 0, 2, 2, 1, 0)) ==
        doctest::Approx(1.0 / 7.0).epsilon(1e-9));
}

TEST_CASE("bev_iou symmetry and rigid invariance") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_real_distribution<double> ua(0, kTwoPi);
  std::uniform_real_distribution<double> ud(0.5, 4);
  for (int i = 0; i < 100; ++i) {
    const Box3D a = make_box(u(rng), u(rng), 0, ud(rng), ud(rng), 1, ua(rng));
    const Box3D b = make_box(u(rng), u(rng), 0, ud(rng), ud(rng), 1, ua(rng));
    CHECK(std::abs(bev_iou(a, b) - bev_iou(b, a)) < 1e-12);
    // common rigid transform
    const double rot = ua(rng);
    const Eigen::Vector3d t(u(rng), u(rng), 0);
    auto moved = [&](Box3D box) {
      box.center = rotate_z(box.center, rot) + t;
      box.yaw = normalize_angle(box.yaw + rot);
      return box;
    };
    CHECK(std::abs(bev_iou(moved(a), moved(b)) - bev_iou(a, b)) < 1e-9);
  }
}

namespace {

// Exhaustive-matching AP oracle: enumerate every injective detection->gt
// assignment consistent with the IoU threshold, score each complete
// assignment by AP@R40, and return the maximum.
struct OracleInstance {
  std::vector<EvalFrame> frames;
  std::string cls;
  double thr;
};

double ap_r40_for_flags(const std::vector<std::pair<double, bool>>& scored_sorted, long total_gt) {
  if (total_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  long tp = 0, fp = 0;
  for (const auto& [score, is_tp] : scored_sorted) {
    is_tp ? ++tp : ++fp;
    precision.push_back(double(tp) / double(tp + fp));
    recall.push_back(double(tp) / double(total_gt));
  }
  double ap = 0.0;
  for (int level = 1; level <= 40; ++level) {
    const double r = level / 40.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r - 1e-12) p = std::max(p, precision[i]);
    }
    ap += p;
  }
  return ap / 40.0;
}

void enumerate_assignments(const std::vector<std::vector<int>>& candidates, std::size_t di,
                           std::vector<int>& chosen, std::vector<bool>& used,
                           const std::function<void(const std::vector<int>&)>& emit) {
  if (di == candidates.size()) {
    emit(chosen);
    return;
  }
  chosen[di] = -1;
  enumerate_assignments(candidates, di + 1, chosen, used, emit);
  for (int gi : candidates[di]) {
    if (used[static_cast<std::size_t>(gi)]) continue;
    used[static_cast<std::size_t>(gi)] = true;
    chosen[di] = gi;
    enumerate_assignments(candidates, di + 1, chosen, used, emit);
    chosen[di] = -1;
    used[static_cast<std::size_t>(gi)] = false;
  }
}

double oracle_ap(const OracleInstance& inst) {
  // flatten detections with global gt indexing per frame
  struct Det {
    double score;
    std::vector<int> candidates;  // global gt ids with IoU >= thr
  };
  std::vector<Det> dets;
  long total_gt = 0;
  for (const auto& frame : inst.frames) {
    std::vector<const Box3D*> gts;
    for (const auto& g : frame.ground_truth) {
      if (g.class_label == inst.cls) gts.push_back(&g);
    }
    for (const auto& d : frame.detections) {
      if (d.box.class_label != inst.cls) continue;
      Det det;
      det.score = d.score;
      for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (bev_iou(d.box, *gts[gi]) >= inst.thr) {
          det.candidates.push_back(static_cast<int>(total_gt + static_cast<long>(gi)));
        }
      }
      dets.push_back(std::move(det));
    }
    total_gt += static_cast<long>(gts.size());
  }
  std::vector<std::vector<int>> candidates;
  candidates.reserve(dets.size());
  for (const auto& d : dets) candidates.push_back(d.candidates);
  std::vector<int> chosen(dets.size(), -1);
  std::vector<bool> used(static_cast<std::size_t>(total_gt), false);
  double best = 0.0;
  enumerate_assignments(candidates, 0, chosen, used, [&](const std::vector<int>& pick) {
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) scored.emplace_back(dets[i].score, pick[i] >= 0);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    best = std::max(best, ap_r40_for_flags(scored, total_gt));
  });
  return best;
}

}  // namespace

TEST_CASE("ap_r40 basics") {
  EvalFrame f;
  f.ground_truth = {make_box(5, 0, 0, 2, 2, 2, 0)};
  f.detections = {{make_box(5, 0, 0, 2, 2, 2, 0), 0.9}};
  CHECK(ap_r40({f}, "Car", 0.5) == doctest::Approx(1.0));

  EvalFrame none;
  none.ground_truth = {make_box(5, 0, 0, 2, 2, 2, 0)};
  CHECK(ap_r40({none}, "Car", 0.5) == doctest::Approx(0.0));

  EvalFrame two;
  two.ground_truth = {make_box(5, 0, 0, 2, 2, 2, 0), make_box(15, 0, 0, 2, 2, 2, 0)};
  two.detections = {{make_box(5, 0, 0, 2, 2, 2, 0), 0.9}};
  CHECK(ap_r40({two}, "Car", 0.5) == doctest::Approx(0.5));
}

TEST_CASE("ap_r40 monotonicity") {
  std::vector<EvalFrame> frames(1);
  frames[0].ground_truth = {make_box(5, 0, 0, 2, 2, 2, 0), make_box(15, 0, 0, 2, 2, 2, 0)};
  frames[0].detections = {{make_box(5, 0, 0, 2, 2, 2, 0), 0.9}};
  const double base = ap_r40(frames, "Car", 0.5);
  // adding a correct detection never decreases AP
  auto more = frames;
  more[0].detections.push_back({make_box(15, 0, 0, 2, 2, 2, 0), 0.8});
  CHECK(ap_r40(more, "Car", 0.5) >= base);
  // a duplicate of an already matched gt never increases AP
  auto dup = frames;
  dup[0].detections.push_back({make_box(5, 0, 0, 2, 2, 2, 0), 0.7});
  CHECK(ap_r40(dup, "Car", 0.5) <= base);
}

TEST_CASE("ap_r40 matches the exhaustive oracle") {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> upos(-8, 8);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> jitter(-1.2, 1.2);
  int checked = 0;
  for (int inst = 0; inst < 200; ++inst) {
    OracleInstance o;
    o.cls = "Car";
    o.thr = 0.5;
    const int n_frames = 1 + inst % 3;
    std::vector<double> scores;
    for (int fi = 0; fi < n_frames; ++fi) {
      EvalFrame frame;
      const int n_gt = count(rng);
      for (int gi = 0; gi < n_gt; ++gi) {
        // disjoint gt boxes on a coarse lattice
        frame.ground_truth.push_back(make_box(upos(rng) * 4, gi * 8.0, 0, 3, 2, 1.5, 0));
      }
      const int n_det = count(rng);
      for (int di = 0; di < n_det; ++di) {
        Box3D b;
        if (!frame.ground_truth.empty() && di % 2 == 0) {
          b = frame.ground_truth[static_cast<std::size_t>(di) % frame.ground_truth.size()];
          b.center.x() += jitter(rng);
          b.center.y() += jitter(rng) * 0.5;
        } else {
          b = make_box(upos(rng) * 4 + 2, upos(rng) * 4, 0, 3, 2, 1.5, 0);
        }
        double s;
        do {
          s = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        } while (std::find(scores.begin(), scores.end(), s) != scores.end());
        scores.push_back(s);
        frame.detections.push_back({b, s});
      }
      o.frames.push_back(std::move(frame));
    }
    const double fast = ap_r40(o.frames, o.cls, o.thr);
    const double slow = oracle_ap(o);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("map_overall") {
  CHECK(map_overall({{"a", 1.0}, {"b", 0.5}, {"c", 0.0}}) == doctest::Approx(0.5));
  CHECK(map_overall({{"a", 0.25}}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(map_overall({}), NoClasses);
}

TEST_CASE("detection dump round-trip") {
  std::vector<std::pair<std::string, std::vector<Detection>>> frames;
  frames.push_back({"000001", {{make_box(5, 1, 0.5, 4, 2, 1.5, 0.3, "Car"), 0.75}}});
  frames.push_back({"000002", {}});
  const auto text = write_detection_dump(frames);
  const auto back = read_detection_dump(text);
  REQUIRE(back.size() == 1);  // empty frames have no lines
  CHECK(back[0].first == "000001");
  CHECK(back[0].second[0].box.class_label == "Car");
  CHECK(back[0].second[0].score == doctest::Approx(0.75));
}
