#pragma once

#include <map>
#include <string>
#include <vector>

namespace slsense {

// One radar reflection. The full feature vector used by the temporal graph
// is (x, y, z, frame), so F = 4.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  int frame = 0;
};

// One gesture recording as seen from one angle.
struct MotionPointCloud {
  std::vector<Point> points;  // acquisition order: frame, then intra-frame
  int angle_id = 0;           // degrees, one of {0, 45, ..., 315}
  int frame_count = 0;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }

  // Throws DataError on non-finite coordinates, negative/out-of-range
  // frames, or an empty cloud. `what` names the offender in the message.
  void validate(const std::string& what = "cloud") const;
};

// Rotates x and y about the vertical axis by `degrees`; z and frame
// numbers are untouched.
MotionPointCloud rotate_view(const MotionPointCloud& cloud, double degrees);

// One gesture instance with the clouds recorded for it, keyed by angle.
// Partial angle sets are allowed.
struct MultiAngleSample {
  std::map<int, MotionPointCloud> clouds;
  int label = -1;
  int subject_id = -1;
  int rep = -1;

  void validate() const;
};

}  // namespace slsense
