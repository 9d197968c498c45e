#pragma once

#include <vector>

#include "slsense/geometry.hpp"

namespace slsense {

// Directed K-NN graph over one motion point cloud. Edges point from a
// neighbor j to its center i; candidates from strictly later frames are
// masked out, so every edge satisfies frame(j) <= frame(i). A node with
// no eligible candidate gets a single self-edge.
struct TemporalGraph {
  std::vector<int> edge_center;    // i, grouped ascending
  std::vector<int> edge_neighbor;  // j
  int node_count = 0;
  int k = 0;

  std::size_t edge_count() const { return edge_center.size(); }
};

// L2 over the full feature vector (x, y, z, frame); +infinity when the
// candidate sits in a strictly later frame. `frame_scale` multiplies the
// frame component before the norm (default 1: raw index).
double masked_distance(const Point& center, const Point& candidate, double frame_scale = 1.0);

// K smallest finite-distance candidates per point, self excluded, ties
// broken by lower point index. Fewer than K candidates: take them all.
TemporalGraph build_temporal_graph(const MotionPointCloud& cloud, int k,
                                   double frame_scale = 1.0);

}  // namespace slsense
