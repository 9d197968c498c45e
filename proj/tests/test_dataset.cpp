#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slsense/dataset.hpp"

using namespace slsense;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("slsense_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

GeneratorSpec small_spec() {
  GeneratorSpec spec;
  spec.classes = 5;
  spec.subjects = 4;
  spec.reps = 10;
  spec.seed = 7;
  spec.points_per_cloud = 48;
  return spec;
}

}  // namespace

TEST_CASE("generator emits classes*subjects*reps samples with all angles") {
  TempDir tmp("gen_counts");
  GeneratorSpec spec = small_spec();
  spec.reps = 2;  // keep the tree small; the count math is the same
  DatasetManifest m = generate_synthetic_dataset(spec, tmp.path.string());
  CHECK(m.samples.size() == 5 * 4 * 2);
  for (const SampleIndexEntry& e : m.samples) CHECK(e.angles.size() == 8);
  MultiAngleSample s = load_sample(m, m.samples[0]);
  CHECK(s.clouds.size() == 8);
}

TEST_CASE("same spec and seed produce byte-identical files") {
  TempDir a("gen_det_a"), b("gen_det_b");
  GeneratorSpec spec = small_spec();
  spec.classes = 3;
  spec.subjects = 2;
  spec.reps = 2;
  generate_synthetic_dataset(spec, a.path.string());
  generate_synthetic_dataset(spec, b.path.string());
  for (int subj = 0; subj < 2; ++subj)
    for (int cls = 0; cls < 3; ++cls)
      for (int rep = 0; rep < 2; ++rep)
        for (int angle : {0, 45, 90, 135, 180, 225, 270, 315}) {
          const std::string rel = "subj_" + std::to_string(subj) + "/class_" +
                                  std::to_string(cls) + "/rep_" + std::to_string(rep) +
                                  "/angle_" + std::to_string(angle) + ".csv";
          CHECK(slurp(a.path / rel) == slurp(b.path / rel));
        }
  CHECK(slurp(a.path / "manifest.json") == slurp(b.path / "manifest.json"));
}

TEST_CASE("angle view is the canonical cloud rotated when no shadowing") {
  GeneratorSpec spec = small_spec();
  MotionPointCloud canonical = generate_canonical_cloud(spec, 0, 0, 0);
  Rng rng(99);
  MotionPointCloud view = render_angle_view(canonical, 90, /*p_shadow=*/0.0, rng);
  REQUIRE(view.points.size() == canonical.points.size());
  MotionPointCloud expected = rotate_view(canonical, -90.0);
  for (std::size_t i = 0; i < view.points.size(); ++i) {
    CHECK(view.points[i].x == doctest::Approx(expected.points[i].x).epsilon(1e-12));
    CHECK(view.points[i].y == doctest::Approx(expected.points[i].y).epsilon(1e-12));
    CHECK(view.points[i].z == canonical.points[i].z);
    CHECK(view.points[i].frame == canonical.points[i].frame);
  }
}

TEST_CASE("canonical clouds depend only on (seed, subject, class, rep)") {
  GeneratorSpec spec = small_spec();
  MotionPointCloud a = generate_canonical_cloud(spec, 1, 2, 3);
  GeneratorSpec spec2 = small_spec();
  spec2.subjects = 9;  // unrelated fields must not matter
  spec2.reps = 99;
  MotionPointCloud b = generate_canonical_cloud(spec2, 1, 2, 3);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].frame == b.points[i].frame);
  }
}

TEST_CASE("partial samples load with only the angles present") {
  TempDir tmp("partial");
  MotionPointCloud c;
  c.frame_count = 2;
  c.points = {{0.1, 0.2, 0.3, 0}, {0.4, 0.5, 0.6, 1}};
  save_cloud_csv(c, (tmp.path / "angle_0.csv").string());
  save_cloud_csv(c, (tmp.path / "angle_45.csv").string());
  MultiAngleSample s = load_sample(tmp.path.string());
  CHECK(s.clouds.size() == 2);
  CHECK(s.clouds.count(0) == 1);
  CHECK(s.clouds.count(45) == 1);
}

TEST_CASE("csv loader names the file and line on malformed rows") {
  TempDir tmp("badrow");
  const fs::path p = tmp.path / "angle_0.csv";
  {
    std::ofstream out(p);
    out << "frame,x,y,z\n0,0.1,0.2,0.3\n1,nan,0.2,0.3\n";
  }
  try {
    load_cloud_csv(p.string(), 0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("angle_0.csv") != std::string::npos);
    CHECK(msg.find(":3") != std::string::npos);
  }
}

TEST_CASE("csv loader rejects negative frames and empty files") {
  TempDir tmp("badframe");
  const fs::path neg = tmp.path / "angle_0.csv";
  {
    std::ofstream out(neg);
    out << "frame,x,y,z\n-1,0.1,0.2,0.3\n";
  }
  CHECK_THROWS_AS(load_cloud_csv(neg.string(), 0), DataError);
  const fs::path empty = tmp.path / "angle_45.csv";
  { std::ofstream out(empty); }
  CHECK_THROWS_AS(load_cloud_csv(empty.string(), 45), DataError);
}

TEST_CASE("generator validates its spec") {
  TempDir tmp("badspec");
  GeneratorSpec spec = small_spec();
  spec.classes = 1;
  CHECK_THROWS_AS(generate_synthetic_dataset(spec, tmp.path.string()), ConfigError);
  spec = small_spec();
  spec.classes = 99;  // more than the trajectory catalogue
  CHECK_THROWS_AS(generate_synthetic_dataset(spec, tmp.path.string()), ConfigError);
  spec = small_spec();
  spec.angles = {30};  // not a legal ring position
  CHECK_THROWS_AS(generate_synthetic_dataset(spec, tmp.path.string()), ConfigError);
}

TEST_CASE("manifest split must be subject disjoint") {
  DatasetManifest m;
  m.class_names = {"a", "b"};
  m.subject_ids = {0, 1};
  m.train_subjects = {0};
  m.test_subjects = {0};
  CHECK_THROWS_AS(m.validate(), DataError);
}

TEST_CASE("manifest round-trips through JSON") {
  TempDir tmp("manifest_rt");
  GeneratorSpec spec = small_spec();
  spec.classes = 2;
  spec.subjects = 3;
  spec.reps = 1;
  DatasetManifest m = generate_synthetic_dataset(spec, tmp.path.string());
  DatasetManifest loaded = load_manifest((tmp.path / "manifest.json").string());
  CHECK(loaded.class_names == m.class_names);
  CHECK(loaded.angle_ids == m.angle_ids);
  CHECK(loaded.samples.size() == m.samples.size());
  CHECK(loaded.train_subjects == m.train_subjects);
  CHECK_NOTHROW(loaded.validate());
}

TEST_CASE("default subject split holds out the last two subjects") {
  TempDir tmp("split");
  GeneratorSpec spec = small_spec();
  spec.classes = 2;
  spec.subjects = 5;
  spec.reps = 1;
  DatasetManifest m = generate_synthetic_dataset(spec, tmp.path.string());
  CHECK(m.train_subjects == std::vector<int>{0, 1, 2});
  CHECK(m.val_subjects == std::vector<int>{3});
  CHECK(m.test_subjects == std::vector<int>{4});
}
