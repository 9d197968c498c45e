#include "slsense/tgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slsense/common.hpp"

namespace slsense {

double masked_distance(const Point& center, const Point& candidate, double frame_scale) {
  if (candidate.frame > center.frame) return std::numeric_limits<double>::infinity();
  const double dx = center.x - candidate.x;
  const double dy = center.y - candidate.y;
  const double dz = center.z - candidate.z;
  const double df = frame_scale * static_cast<double>(center.frame - candidate.frame);
  return std::sqrt(dx * dx + dy * dy + dz * dz + df * df);
}

TemporalGraph build_temporal_graph(const MotionPointCloud& cloud, int k, double frame_scale) {
  if (k < 1) throw ConfigError("build_temporal_graph: k must be >= 1");
  const int n = static_cast<int>(cloud.points.size());
  if (n == 0) throw DataError("build_temporal_graph: empty cloud");

  TemporalGraph g;
  g.node_count = n;
  g.k = k;
  g.edge_center.reserve(static_cast<std::size_t>(n) * k);
  g.edge_neighbor.reserve(static_cast<std::size_t>(n) * k);

  std::vector<std::pair<double, int>> cand;
  cand.reserve(n);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = masked_distance(cloud.points[i], cloud.points[j], frame_scale);
      if (std::isinf(d)) continue;
      cand.emplace_back(d, j);
    }
    const int take = std::min<int>(k, static_cast<int>(cand.size()));
    if (take == 0) {
      g.edge_center.push_back(i);
      g.edge_neighbor.push_back(i);  // fallback self-edge
      continue;
    }
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    for (int t = 0; t < take; ++t) {
      g.edge_center.push_back(i);
      g.edge_neighbor.push_back(cand[t].second);
    }
  }
  return g;
}

}  // namespace slsense
