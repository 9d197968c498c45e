#include "slsense/geometry.hpp"

#include <cmath>

#include "slsense/common.hpp"

namespace slsense {

void MotionPointCloud::validate(const std::string& what) const {
  if (points.empty()) throw DataError(what + ": empty point cloud");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DataError(what + ": non-finite coordinate at point " + std::to_string(i));
    }
    if (p.frame < 0 || p.frame >= frame_count) {
      throw DataError(what + ": frame " + std::to_string(p.frame) + " out of range [0, " +
                      std::to_string(frame_count) + ") at point " + std::to_string(i));
    }
  }
}

void MultiAngleSample::validate() const {
  if (clouds.empty()) throw DataError("sample: no angle clouds present");
  for (const auto& [angle, cloud] : clouds) {
    cloud.validate("angle " + std::to_string(angle));
    if (cloud.angle_id != angle)
      throw DataError("sample: cloud angle_id " + std::to_string(cloud.angle_id) +
                      " does not match key " + std::to_string(angle));
  }
}

MotionPointCloud rotate_view(const MotionPointCloud& cloud, double degrees) {
  const double rad = degrees * (3.14159265358979323846 / 180.0);
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  MotionPointCloud out = cloud;
  for (Point& p : out.points) {
    const double x = p.x;
    const double y = p.y;
    p.x = c * x - s * y;
    p.y = s * x + c * y;
  }
  return out;
}

}  // namespace slsense
