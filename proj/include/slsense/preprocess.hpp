#pragma once

#include <map>
#include <vector>

#include "slsense/clustering.hpp"
#include "slsense/common.hpp"
#include "slsense/geometry.hpp"

namespace slsense {

struct PreprocessConfig {
  int target_frames = 32;      // T
  int points_per_frame = 32;   // m
  double translation_m = 0.10;
  double scale_min = 0.8;
  double scale_max = 1.25;
  double jitter_sigma = 0.01;
  double jitter_clip_m = 0.03;
  bool clip_jitter = true;     // clamp the jitter displacement to +-jitter_clip_m
  bool shuffle = true;

  void validate() const;
};

// Re-labels points into T frames by acquisition order: the first
// floor(n/T) points (plus one extra for the first n mod T frames) become
// frame 0, and so on. Coordinates are untouched. Throws DataError when
// the cloud has fewer than T points.
MotionPointCloud bin_frames(const MotionPointCloud& cloud, int target_frames);

// Fixes a frame to exactly m points: K-means centroids when over-full,
// AHC centroid insertion when under-full, identity at m. The returned
// points carry `frame_label`.
std::vector<Point> resample_frame(const std::vector<Point>& frame_points, int m,
                                  int frame_label, Rng& rng);

// bin_frames followed by per-frame resampling; output has exactly
// T * m points in frame order.
MotionPointCloud preprocess_cloud(const MotionPointCloud& cloud, const PreprocessConfig& cfg,
                                  Rng& rng);

// All clouds of a sample; each angle preprocessed independently.
MultiAngleSample preprocess_sample(const MultiAngleSample& sample, const PreprocessConfig& cfg,
                                   Rng& rng);

// Training-time augmentation, in order: shared translation, shared scale,
// per-point clipped Gaussian jitter, per-frame point shuffle. Translation
// and scale use one draw applied coherently to every angle's cloud.
MultiAngleSample augment(const MultiAngleSample& sample, Rng& rng, const PreprocessConfig& cfg);

}  // namespace slsense
