#include "lcfuse/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace lcfuse {

namespace {

using Vec2 = Eigen::Vector2d;

constexpr double kAreaEps = 1e-12;

std::array<Vec2, 4> box_corners(const Box3D& b) {
  const double hl = 0.5 * b.dims.x(), hw = 0.5 * b.dims.y();
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Vec2 center(b.center.x(), b.center.y());
  const Vec2 ex(c, s), ey(-s, c);
  // counter-clockwise
  return {center + hl * ex + hw * ey, center - hl * ex + hw * ey, center - hl * ex - hw * ey,
          center + hl * ex - hw * ey};
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

// Clip a polygon against the half-plane left of edge a->b (inclusive).
std::vector<Vec2> clip_edge(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 2);
  const Vec2 e = b - a;
  const auto side = [&](const Vec2& p) { return e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x()); };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % poly.size()];
    const double sc = side(cur), sn = side(nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

double intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  std::vector<Vec2> poly(ca.begin(), ca.end());
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_edge(poly, cb[i], cb[(i + 1) % 4]);
  }
  return polygon_area(poly);
}

}  // namespace

double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = intersection_area(a, b);
  const double area_a = a.dims.x() * a.dims.y();
  const double area_b = b.dims.x() * b.dims.y();
  const double uni = area_a + area_b - inter;
  if (uni < kAreaEps) return 0.0;
  const double iou = inter / uni;
  return std::clamp(iou, 0.0, 1.0);
}

double ap_r40(const std::vector<EvalFrame>& frames, const std::string& class_label, double iou_threshold) {
  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> scored;
  long total_gt = 0;
  for (const auto& frame : frames) {
    std::vector<const Box3D*> gts;
    for (const auto& g : frame.ground_truth) {
      if (g.class_label == class_label) gts.push_back(&g);
    }
    total_gt += static_cast<long>(gts.size());
    std::vector<const Detection*> dets;
    for (const auto& d : frame.detections) {
      if (d.box.class_label == class_label) dets.push_back(&d);
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection* x, const Detection* y) { return x->score > y->score; });
    std::vector<bool> taken(gts.size(), false);
    for (const auto* d : dets) {
      int best = -1;
      double best_iou = iou_threshold;
      for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (taken[gi]) continue;
        const double iou = bev_iou(d->box, *gts[gi]);
        if (iou >= best_iou) {
          best_iou = iou;
          best = static_cast<int>(gi);
        }
      }
      if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
      scored.push_back({d->score, best >= 0});
    }
  }
  if (total_gt == 0) return 0.0;
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  long tp = 0, fp = 0;
  for (const auto& s : scored) {
    s.tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }
  double ap = 0.0;
  for (int level = 1; level <= 40; ++level) {
    const double r = static_cast<double>(level) / 40.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r - 1e-12) p = std::max(p, precision[i]);
    }
    ap += p;
  }
  return ap / 40.0;
}

double map_overall(const std::map<std::string, double>& per_class_ap) {
  if (per_class_ap.empty()) throw NoClasses("map_overall: no classes");
  double total = 0.0;
  for (const auto& [cls, ap] : per_class_ap) total += ap;
  return total / static_cast<double>(per_class_ap.size());
}

ApTable evaluate_detections(const std::vector<EvalFrame>& frames, const EvalConfig& cfg) {
  std::map<std::string, bool> classes;
  for (const auto& f : frames) {
    for (const auto& g : f.ground_truth) classes[g.class_label] = true;
  }
  ApTable table;
  for (const auto& [cls, present] : classes) {
    table.per_class[cls] = ap_r40(frames, cls, cfg.threshold_for(cls));
  }
  table.overall = table.per_class.empty() ? 0.0 : map_overall(table.per_class);
  return table;
}

std::string write_detection_dump(const std::vector<std::pair<std::string, std::vector<Detection>>>& frames) {
  std::ostringstream out;
  char buf[320];
  for (const auto& [frame_id, dets] : frames) {
    for (const auto& d : dets) {
      std::snprintf(buf, sizeof(buf), "%s %s %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n", frame_id.c_str(),
                    d.box.class_label.c_str(), d.score, d.box.center.x(), d.box.center.y(), d.box.center.z(),
                    d.box.dims.x(), d.box.dims.y(), d.box.dims.z(), d.box.yaw);
      out << buf;
    }
  }
  return out.str();
}

std::vector<std::pair<std::string, std::vector<Detection>>> read_detection_dump(const std::string& text) {
  std::map<std::string, std::vector<Detection>> by_frame;
  std::vector<std::string> order;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string frame, cls;
    Detection d;
    double x, y, z, l, w, h;
    if (!(ls >> frame >> cls >> d.score >> x >> y >> z >> l >> w >> h >> d.box.yaw)) {
      throw DataError("detection dump line " + std::to_string(line_no) + ": expected 10 fields");
    }
    d.box.class_label = cls;
    d.box.center = {x, y, z};
    d.box.dims = {l, w, h};
    if (!by_frame.count(frame)) order.push_back(frame);
    by_frame[frame].push_back(std::move(d));
  }
  std::vector<std::pair<std::string, std::vector<Detection>>> out;
  out.reserve(order.size());
  for (const auto& f : order) out.emplace_back(f, std::move(by_frame[f]));
  return out;
}

}  // namespace lcfuse
