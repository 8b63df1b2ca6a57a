#include "lcfuse/pasting.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace lcfuse {

namespace {

int wrapped_offset(int from, int to, int n) {
  int d = (to - from) % n;
  if (d > n / 2) d -= n;
  if (d < -(n - 1) / 2) d += n;
  return d;
}

}  // namespace

double added_intensity_policy(const ObjectPoints& raw) {
  if (raw.points.empty()) return 0.5;
  double total = 0.0;
  for (const auto& p : raw.points) total += p.intensity;
  return total / static_cast<double>(raw.points.size());
}

const DbEntry& query_donor(const DenseObjectDB& db, const PolarIndex& want) {
  const int n = db.config.n_bins;
  const DbEntry* best = nullptr;
  std::array<int, 5> best_key{};
  for (const auto& [key, entry] : db.entries) {
    if (key.class_label != want.class_label) continue;
    const int dd = wrapped_offset(want.dir_bin, key.dir_bin, n);
    const int dr = wrapped_offset(want.rot_bin, key.rot_bin, n);
    const std::array<int, 5> cand{std::max(std::abs(dd), std::abs(dr)), std::abs(dd), std::abs(dr),
                                  dd < 0 ? 1 : 0, dr < 0 ? 1 : 0};
    if (!best || cand < best_key) {
      best = &entry;
      best_key = cand;
    }
  }
  if (!best) throw NoDonor("no database entry for class " + want.class_label);
  return *best;
}

Scene enhance_scene(const Scene& scene, const DenseObjectDB& db) {
  Scene out = scene;
  out.added.clear();
  out.added.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    const PolarIndex key = group_index(obj.box, db.config.n_bins);
    const DbEntry& donor = query_donor(db, key);
    AddedPoints added;
    added.points = decanonicalize(donor.object, obj.box, added_intensity_policy(obj));
    out.added.push_back(std::move(added));
  }
  return out;
}

}  // namespace lcfuse
