#pragma once

#include <array>
#include <vector>

#include "slsense/common.hpp"

namespace slsense {

using Vec3 = std::array<double, 3>;

struct KMeansResult {
  std::vector<Vec3> centroids;      // ordered by lowest member point index
  std::vector<int> assignment;      // per input point, index into centroids
  double objective = 0.0;           // sum of squared distances to centroids
};

struct KMeansOptions {
  int restarts = 16;
  int max_iters = 50;
  double tol = 1e-6;
};

// Lloyd iterations plus a Hartigan-Wong refinement pass, restarted from
// farthest-point, D^2-sampled, and uniform seed sets drawn from `rng`.
// Assignment ties go to the lowest cluster index, seeding ties to the
// lowest point index. Emptied clusters are re-seeded with the point
// farthest from its own centroid.
KMeansResult kmeans(const std::vector<Vec3>& pts, int k, Rng& rng,
                    const KMeansOptions& opts = {});

// Grows `pts` by repeatedly appending the centroid (midpoint) of the
// closest pair among originals and previously appended centroids, until
// `target` points exist. A single input point is duplicated.
std::vector<Vec3> ahc_upsample(std::vector<Vec3> pts, int target);

}  // namespace slsense
