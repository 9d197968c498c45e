#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slsense/common.hpp"
#include "slsense/geometry.hpp"

using namespace slsense;

namespace {

MotionPointCloud random_cloud(Rng& rng, int n, int frames) {
  MotionPointCloud c;
  c.frame_count = frames;
  for (int i = 0; i < n; ++i) {
    Point p;
    p.x = rng.uniform(-1.0, 1.0);
    p.y = rng.uniform(-1.0, 1.0);
    p.z = rng.uniform(0.0, 2.0);
    p.frame = rng.below_int(frames);
    c.points.push_back(p);
  }
  return c;
}

double dist3(const Point& a, const Point& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

}  // namespace

TEST_CASE("rotate_view identity") {
  Rng rng(11);
  MotionPointCloud c = random_cloud(rng, 20, 4);
  MotionPointCloud r = rotate_view(c, 0.0);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(r.points[i].x == c.points[i].x);
    CHECK(r.points[i].y == c.points[i].y);
  }
}

TEST_CASE("rotate_view inverse composes to identity") {
  Rng rng(12);
  MotionPointCloud c = random_cloud(rng, 50, 8);
  MotionPointCloud r = rotate_view(rotate_view(c, 45.0), -45.0);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(std::abs(r.points[i].x - c.points[i].x) < 1e-12);
    CHECK(std::abs(r.points[i].y - c.points[i].y) < 1e-12);
    CHECK(r.points[i].z == c.points[i].z);
    CHECK(r.points[i].frame == c.points[i].frame);
  }
}

TEST_CASE("rotate_view 90 degrees maps x axis onto y axis") {
  MotionPointCloud c;
  c.frame_count = 1;
  c.points.push_back({1.0, 0.0, 0.0, 0});
  MotionPointCloud r = rotate_view(c, 90.0);
  CHECK(std::abs(r.points[0].x - 0.0) < 1e-15);
  CHECK(std::abs(r.points[0].y - 1.0) < 1e-15);
  CHECK(r.points[0].z == 0.0);
}

TEST_CASE("rotate_view preserves counts, z, frames and pairwise distances") {
  Rng rng(13);
  MotionPointCloud c = random_cloud(rng, 40, 6);
  MotionPointCloud r = rotate_view(c, 135.0);
  REQUIRE(r.points.size() == c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(r.points[i].z == c.points[i].z);
    CHECK(r.points[i].frame == c.points[i].frame);
    for (std::size_t j = i + 1; j < c.points.size(); ++j) {
      CHECK(std::abs(dist3(r.points[i], r.points[j]) - dist3(c.points[i], c.points[j])) < 1e-9);
    }
  }
}

TEST_CASE("cloud validation rejects bad frames and non-finite coords") {
  MotionPointCloud c;
  c.frame_count = 2;
  CHECK_THROWS_AS(c.validate(), DataError);  // empty
  c.points.push_back({0.0, 0.0, 0.0, 1});
  CHECK_NOTHROW(c.validate());
  c.points.push_back({0.0, 0.0, 0.0, 2});  // frame out of range
  CHECK_THROWS_AS(c.validate(), DataError);
  c.points.pop_back();
  c.points.push_back({std::nan(""), 0.0, 0.0, 0});
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("sample validation needs at least one angle") {
  MultiAngleSample s;
  CHECK_THROWS_AS(s.validate(), DataError);
}
