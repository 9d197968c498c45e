#include "slsense/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace slsense {

void PreprocessConfig::validate() const {
  if (target_frames < 1) throw ConfigError("preprocess.target_frames must be >= 1");
  if (points_per_frame < 1) throw ConfigError("preprocess.points_per_frame must be >= 1");
  if (scale_min <= 0.0 || scale_max <= 0.0 || scale_min > scale_max)
    throw ConfigError("preprocess scale range must be positive with scale_min <= scale_max");
  if (translation_m < 0.0 || jitter_sigma < 0.0 || jitter_clip_m < 0.0)
    throw ConfigError("preprocess magnitudes must be non-negative");
}

MotionPointCloud bin_frames(const MotionPointCloud& cloud, int target_frames) {
  const int n = static_cast<int>(cloud.points.size());
  const int t = target_frames;
  if (t < 1) throw ConfigError("bin_frames: target_frames must be >= 1");
  if (n < t)
    throw DataError("bin_frames: cloud has " + std::to_string(n) + " points, fewer than " +
                    std::to_string(t) + " frames");
  MotionPointCloud out = cloud;
  const int base = n / t;
  const int extra = n % t;  // earliest frames get one extra point
  int idx = 0;
  for (int f = 0; f < t; ++f) {
    const int take = base + (f < extra ? 1 : 0);
    for (int j = 0; j < take; ++j) out.points[idx++].frame = f;
  }
  out.frame_count = t;
  return out;
}

std::vector<Point> resample_frame(const std::vector<Point>& frame_points, int m,
                                  int frame_label, Rng& rng) {
  if (frame_points.empty()) throw DataError("resample_frame: empty frame");
  if (m < 1) throw ConfigError("resample_frame: m must be >= 1");
  const int n = static_cast<int>(frame_points.size());

  std::vector<Point> out;
  out.reserve(m);
  if (n == m) {
    out = frame_points;
    for (Point& p : out) p.frame = frame_label;
    return out;
  }

  std::vector<Vec3> pts(frame_points.size());
  for (int i = 0; i < n; ++i) pts[i] = {frame_points[i].x, frame_points[i].y, frame_points[i].z};

  std::vector<Vec3> result;
  if (n > m) {
    result = kmeans(pts, m, rng).centroids;
  } else {
    result = ahc_upsample(std::move(pts), m);
  }
  for (const Vec3& v : result) out.push_back(Point{v[0], v[1], v[2], frame_label});
  return out;
}

MotionPointCloud preprocess_cloud(const MotionPointCloud& cloud, const PreprocessConfig& cfg,
                                  Rng& rng) {
  MotionPointCloud binned = bin_frames(cloud, cfg.target_frames);
  std::vector<std::vector<Point>> frames(cfg.target_frames);
  for (const Point& p : binned.points) frames[p.frame].push_back(p);

  MotionPointCloud out;
  out.angle_id = cloud.angle_id;
  out.frame_count = cfg.target_frames;
  out.points.reserve(static_cast<std::size_t>(cfg.target_frames) * cfg.points_per_frame);
  for (int f = 0; f < cfg.target_frames; ++f) {
    std::vector<Point> fixed = resample_frame(frames[f], cfg.points_per_frame, f, rng);
    out.points.insert(out.points.end(), fixed.begin(), fixed.end());
  }
  return out;
}

MultiAngleSample preprocess_sample(const MultiAngleSample& sample, const PreprocessConfig& cfg,
                                   Rng& rng) {
  MultiAngleSample out = sample;
  out.clouds.clear();
  for (const auto& [angle, cloud] : sample.clouds) {
    out.clouds.emplace(angle, preprocess_cloud(cloud, cfg, rng));
  }
  return out;
}

MultiAngleSample augment(const MultiAngleSample& sample, Rng& rng, const PreprocessConfig& cfg) {
  // One translation/scale draw for the whole sample so the multi-view
  // geometry stays coherent.
  const double tx = rng.uniform(-cfg.translation_m, cfg.translation_m);
  const double ty = rng.uniform(-cfg.translation_m, cfg.translation_m);
  const double tz = rng.uniform(-cfg.translation_m, cfg.translation_m);
  const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);

  MultiAngleSample out = sample;
  out.clouds.clear();
  for (const auto& [angle, cloud] : sample.clouds) {
    MotionPointCloud c = cloud;
    for (Point& p : c.points) {
      p.x = (p.x + tx) * scale;
      p.y = (p.y + ty) * scale;
      p.z = (p.z + tz) * scale;
      if (cfg.jitter_sigma > 0.0) {
        double dx = rng.normal(0.0, cfg.jitter_sigma);
        double dy = rng.normal(0.0, cfg.jitter_sigma);
        double dz = rng.normal(0.0, cfg.jitter_sigma);
        if (cfg.clip_jitter) {
          dx = std::clamp(dx, -cfg.jitter_clip_m, cfg.jitter_clip_m);
          dy = std::clamp(dy, -cfg.jitter_clip_m, cfg.jitter_clip_m);
          dz = std::clamp(dz, -cfg.jitter_clip_m, cfg.jitter_clip_m);
        }
        p.x += dx;
        p.y += dy;
        p.z += dz;
      }
    }
    if (cfg.shuffle) {
      std::vector<std::vector<Point>> frames(c.frame_count);
      for (const Point& p : c.points) frames[p.frame].push_back(p);
      c.points.clear();
      for (auto& f : frames) {
        rng.shuffle(f);
        c.points.insert(c.points.end(), f.begin(), f.end());
      }
    }
    out.clouds.emplace(angle, std::move(c));
  }
  return out;
}

}  // namespace slsense
