#pragma once

// Polar pasting: strictly additive scene enhancement. Each labeled object
// queries the dense-object database by its polar index and gains the queried
// entry, de-canonicalized into its own box, as an added point set.

#include "lcfuse/sampling_db.hpp"

namespace lcfuse {

struct NoDonor : DataError {
  using DataError::DataError;
};

// Mean intensity of the raw points; 0.5 when the object is empty.
double added_intensity_policy(const ObjectPoints& raw);

// Nearest populated bin for (class, dir, rot): Chebyshev ring distance with
// wraparound, ties by smaller |dir offset| then smaller |rot offset| then
// positive offset first. Throws NoDonor when the class has no entries.
const DbEntry& query_donor(const DenseObjectDB& db, const PolarIndex& want);

// Raw object and background points are untouched; `added` gets one set per
// object. Enhancing an already-enhanced scene replaces the added sets.
Scene enhance_scene(const Scene& scene, const DenseObjectDB& db);

}  // namespace lcfuse
