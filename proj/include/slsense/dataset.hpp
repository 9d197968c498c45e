#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slsense/common.hpp"
#include "slsense/geometry.hpp"

namespace slsense {

struct SampleIndexEntry {
  int subject = 0;
  int label = 0;
  int rep = 0;
  std::string dir;          // relative to the dataset root
  std::vector<int> angles;  // angle files present
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<int> subject_ids;
  std::vector<int> angle_ids;
  std::vector<int> train_subjects;
  std::vector<int> val_subjects;
  std::vector<int> test_subjects;
  std::vector<SampleIndexEntry> samples;
  std::string root;  // directory containing manifest.json and subj_* dirs

  int class_count() const { return static_cast<int>(class_names.size()); }
  // Subject-disjoint splits and referenced-file existence.
  void validate() const;
};

struct GeneratorSpec {
  int classes = 5;
  int subjects = 5;
  int reps = 10;
  std::vector<int> angles = {0, 45, 90, 135, 180, 225, 270, 315};
  std::uint64_t seed = 1;
  int points_per_cloud = 320;     // canonical cloud size before occlusion
  double torso_fraction = 0.35;   // share of points reflected by the torso
  double p_shadow = 0.6;          // drop probability for away-facing points
  double noise_scale = 1.0;       // multiplier on subject/rep variability
  double duration_s = 3.0;
  int fps = 30;
  // Subject-disjoint split; empty lists fall back to: last subject test,
  // second-to-last validation, rest train.
  std::vector<int> train_subjects;
  std::vector<int> val_subjects;
  std::vector<int> test_subjects;

  void validate() const;
};

// Number of distinct hand-trajectory primitives available.
int gesture_primitive_count();
const char* gesture_primitive_name(int class_id);

// Renders the canonical (angle 0) cloud for one gesture instance.
// Deterministic from (seed, subject, class, rep) alone.
MotionPointCloud generate_canonical_cloud(const GeneratorSpec& spec, int subject, int cls,
                                          int rep);

// Canonical cloud rotated into an angle view with shadowing applied.
MotionPointCloud render_angle_view(const MotionPointCloud& canonical, int angle_deg,
                                   double p_shadow, Rng& rng);

// Writes the full dataset tree plus manifest.json under `root`.
DatasetManifest generate_synthetic_dataset(const GeneratorSpec& spec, const std::string& root);

// CSV: header `frame,x,y,z`, floats with 9 significant digits, LF endings.
void save_cloud_csv(const MotionPointCloud& cloud, const std::string& path);
MotionPointCloud load_cloud_csv(const std::string& path, int angle_id);

// Loads every angle_<deg>.csv present in `dir`; partial samples allowed.
MultiAngleSample load_sample(const std::string& dir);
MultiAngleSample load_sample(const DatasetManifest& manifest, const SampleIndexEntry& entry);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace slsense
