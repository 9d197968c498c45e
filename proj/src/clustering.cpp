#include "slsense/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slsense {

namespace {

double sqdist(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Greedy farthest-point seeds, starting from `first`.
std::vector<int> farthest_point_seeds(const std::vector<Vec3>& pts, int k, int first) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> seeds{first};
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < k) {
    const Vec3& last = pts[seeds.back()];
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], sqdist(pts[i], last));
      if (std::find(seeds.begin(), seeds.end(), i) != seeds.end()) continue;
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    seeds.push_back(best);
  }
  return seeds;
}

// k-means++ seeds with greedy candidate selection: every step draws a
// few D^2-distributed candidates and keeps the one that lowers the total
// potential the most.
std::vector<int> dsquared_seeds(const std::vector<Vec3>& pts, int k, Rng& rng) {
  const int n = static_cast<int>(pts.size());
  const int candidates = 3;
  std::vector<int> seeds{rng.below_int(n)};
  std::vector<double> dist(n);
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::numeric_limits<double>::infinity();
      for (int s : seeds) dist[i] = std::min(dist[i], sqdist(pts[i], pts[s]));
      total += dist[i];
    }
    int pick = -1;
    if (total <= 0.0) {
      for (int i = 0; i < n; ++i) {  // all candidates coincide: lowest unchosen index
        if (std::find(seeds.begin(), seeds.end(), i) == seeds.end()) {
          pick = i;
          break;
        }
      }
    } else {
      double pick_potential = std::numeric_limits<double>::infinity();
      for (int c = 0; c < candidates; ++c) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        int cand = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += dist[i];
          if (u < acc) {
            cand = i;
            break;
          }
        }
        double potential = 0.0;
        for (int i = 0; i < n; ++i) potential += std::min(dist[i], sqdist(pts[i], pts[cand]));
        if (potential < pick_potential) {
          pick_potential = potential;
          pick = cand;
        }
      }
    }
    seeds.push_back(pick);
  }
  return seeds;
}

struct LloydOutcome {
  std::vector<Vec3> centroids;
  std::vector<int> assignment;
  double objective = 0.0;
};

LloydOutcome lloyd(const std::vector<Vec3>& pts, int k, const std::vector<int>& seed_idx,
                   const KMeansOptions& opts) {
  const int n = static_cast<int>(pts.size());
  std::vector<Vec3> cent(k);
  for (int c = 0; c < k; ++c) cent[c] = pts[seed_idx[c]];

  std::vector<int> assign(n, 0);
  double prev_obj = std::numeric_limits<double>::infinity();
  double obj = 0.0;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    obj = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(pts[i], cent[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sqdist(pts[i], cent[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
      obj += best_d;
    }
    std::vector<Vec3> sum(k, Vec3{0, 0, 0});
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < 3; ++d) sum[assign[i]][d] += pts[i][d];
      ++count[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        for (int d = 0; d < 3; ++d) cent[c][d] = sum[c][d] / count[c];
        continue;
      }
      // Re-seed an emptied cluster with the point farthest from its
      // current centroid (lowest index on ties).
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = sqdist(pts[i], cent[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      cent[c] = pts[far];
      assign[far] = c;
    }
    if (std::abs(prev_obj - obj) <= opts.tol) break;
    prev_obj = obj;
  }

  // Re-derive exact means for the final assignment.
  std::vector<Vec3> sum(k, Vec3{0, 0, 0});
  std::vector<int> count(k, 0);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) sum[assign[i]][d] += pts[i][d];
    ++count[assign[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (count[c] > 0)
      for (int d = 0; d < 3; ++d) cent[c][d] = sum[c][d] / count[c];
  }

  // Hartigan-Wong refinement: single-point moves that lower the
  // objective, with the size-corrected gain, escape Lloyd-stable local
  // optima. Passes run in point order until none improves.
  for (int pass = 0; pass < 50; ++pass) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      const int a = assign[i];
      if (count[a] <= 1) continue;
      const double removal = static_cast<double>(count[a]) / (count[a] - 1) *
                             sqdist(pts[i], cent[a]);
      int target = -1;
      double best_delta = -1e-15;
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double insertion = static_cast<double>(count[b]) / (count[b] + 1) *
                                 sqdist(pts[i], cent[b]);
        const double delta = insertion - removal;
        if (delta < best_delta) {
          best_delta = delta;
          target = b;
        }
      }
      if (target < 0) continue;
      for (int d = 0; d < 3; ++d) {
        sum[a][d] -= pts[i][d];
        sum[target][d] += pts[i][d];
      }
      --count[a];
      ++count[target];
      for (int d = 0; d < 3; ++d) {
        cent[a][d] = sum[a][d] / count[a];
        cent[target][d] = sum[target][d] / count[target];
      }
      assign[i] = target;
      moved = true;
    }
    if (!moved) break;
  }

  obj = 0.0;
  for (int i = 0; i < n; ++i) obj += sqdist(pts[i], cent[assign[i]]);
  return {std::move(cent), std::move(assign), obj};
}

}  // namespace

KMeansResult kmeans(const std::vector<Vec3>& pts, int k, Rng& rng,
                    const KMeansOptions& opts) {
  const int n = static_cast<int>(pts.size());
  if (n == 0) throw DataError("kmeans: empty input");
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (k > n) throw ConfigError("kmeans: k exceeds point count");

  LloydOutcome best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    // Restart 0 spreads seeds greedily, odd restarts use D^2 sampling,
    // the rest draw uniform seed subsets. All consume the caller's RNG.
    std::vector<int> seeds;
    if (r == 0) {
      seeds = farthest_point_seeds(pts, k, rng.below_int(n));
    } else if (r % 2 == 1) {
      seeds = dsquared_seeds(pts, k, rng);
    } else {
      std::vector<int> order(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      rng.shuffle(order);
      seeds.assign(order.begin(), order.begin() + k);
    }
    LloydOutcome out = lloyd(pts, k, seeds, opts);
    if (out.objective < best.objective) best = std::move(out);
  }

  // Order clusters by their lowest member index so output is stable.
  std::vector<int> lowest(k, n);
  for (int i = 0; i < n; ++i) lowest[best.assignment[i]] = std::min(lowest[best.assignment[i]], i);
  std::vector<int> order(k);
  for (int c = 0; c < k; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lowest[a] < lowest[b]; });
  std::vector<int> rank(k);
  for (int c = 0; c < k; ++c) rank[order[c]] = c;

  KMeansResult res;
  res.centroids.resize(k);
  res.assignment.resize(n);
  for (int c = 0; c < k; ++c) res.centroids[rank[c]] = best.centroids[c];
  for (int i = 0; i < n; ++i) res.assignment[i] = rank[best.assignment[i]];
  res.objective = best.objective;
  return res;
}

std::vector<Vec3> ahc_upsample(std::vector<Vec3> pts, int target) {
  if (pts.empty()) throw DataError("ahc_upsample: empty input");
  while (static_cast<int>(pts.size()) < target) {
    if (pts.size() == 1) {
      pts.push_back(pts[0]);
      continue;
    }
    const int n = static_cast<int>(pts.size());
    int bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = sqdist(pts[i], pts[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    pts.push_back(Vec3{(pts[bi][0] + pts[bj][0]) / 2.0, (pts[bi][1] + pts[bj][1]) / 2.0,
                       (pts[bi][2] + pts[bj][2]) / 2.0});
  }
  if (static_cast<int>(pts.size()) > target) pts.resize(target);
  return pts;
}

}  // namespace slsense
