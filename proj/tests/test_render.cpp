#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "neuroavoid/render.hpp"

using namespace neuroavoid;

namespace {

World uniform_world(std::uint8_t level) {
  World w;
  w.background.kind = Background::Kind::uniform;
  w.background.base = {level, level, level};
  return w;
}

Obstacle sphere_at(const Vec3& c, double r, std::uint8_t level) {
  Obstacle o;
  o.start = o.center = c;
  o.radius = r;
  o.color = {level, level, level};
  return o;
}

struct Blob {
  double area = 0.0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

// Coverage-weighted area and centroid of pixels that differ from the background level.
Blob measure(const IntensityImage& img, int bg, int fg) {
  Blob b;
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u) {
      const double w = (img.channels[0](v, u) - bg) / double(fg - bg);
      b.area += w;
      b.centroid += w * Eigen::Vector2d(u, v);
    }
  if (b.area > 0) b.centroid /= b.area;
  return b;
}

}  // namespace

TEST_CASE("empty uniform world renders the background level") {
  const CameraModel cam;
  const IntensityImage img = render_frame(uniform_world(128), Pose::Identity(), cam);
  REQUIRE(img.height() == 120);
  REQUIRE(img.width() == 160);
  for (int c = 0; c < 3; ++c) CHECK((img.channels[c] == 128).all());
}

TEST_CASE("sphere on the optical axis projects to a centred disc") {
  CameraModel cam;
  cam.supersample = 8;
  const double r = 0.06, d = 0.5;
  World w = uniform_world(0);
  w.obstacles.push_back(sphere_at(Vec3(d, 0, 0), r, 255));
  const Blob b = measure(render_frame(w, Pose::Identity(), cam), 0, 255);

  // silhouette of a sphere is a disc of radius f r / sqrt(d^2 - r^2)
  const double radius = cam.focal_length * r / std::sqrt(d * d - r * r);
  CHECK(std::sqrt(b.area / M_PI) == doctest::Approx(radius).epsilon(0.02));
  CHECK(std::sqrt(b.area / M_PI) == doctest::Approx(cam.focal_length * r / d).epsilon(0.03));
  CHECK(b.centroid.x() == doctest::Approx(cam.cx).epsilon(0.005));
  CHECK(b.centroid.y() == doctest::Approx(cam.cy).epsilon(0.005));
}

TEST_CASE("lateral camera shift moves the disc by f delta / d") {
  CameraModel cam;
  cam.supersample = 8;
  const double d = 0.6, delta = 0.05;
  World w = uniform_world(0);
  w.obstacles.push_back(sphere_at(Vec3(d, 0, 0), 0.05, 255));
  Pose shifted = Pose::Identity();
  shifted.translation() = Vec3(0, delta, 0);
  const Blob a = measure(render_frame(w, Pose::Identity(), cam), 0, 255);
  const Blob b = measure(render_frame(w, shifted, cam), 0, 255);
  // the camera moves left, so the disc moves right in the image
  CHECK(b.centroid.x() - a.centroid.x() == doctest::Approx(cam.focal_length * delta / d).epsilon(0.03));
  CHECK(std::abs(b.centroid.y() - a.centroid.y()) < 0.05);
}

TEST_CASE("rendered centroid matches the analytic projection") {
  CameraModel cam;
  cam.supersample = 4;
  for (const Vec3& c : {Vec3(0.8, 0.1, -0.05), Vec3(0.5, -0.12, 0.08), Vec3(1.0, 0.2, 0.2)}) {
    World w = uniform_world(0);
    w.obstacles.push_back(sphere_at(c, 0.03, 255));
    const Blob b = measure(render_frame(w, Pose::Identity(), cam), 0, 255);
    const auto p = project(cam, c);
    REQUIRE(p);
    CHECK((b.centroid - *p).norm() < 1.0);
  }
}

TEST_CASE("nearer obstacle occludes the farther one") {
  const CameraModel cam;
  World w = uniform_world(0);
  w.obstacles.push_back(sphere_at(Vec3(1.0, 0, 0), 0.2, 100));
  w.obstacles.push_back(sphere_at(Vec3(0.5, 0, 0), 0.05, 200));
  const IntensityImage img = render_frame(w, Pose::Identity(), cam);
  CHECK(int(img.channels[0](60, 80)) == 200);
  CHECK(int(img.channels[0](60, 80 + 12)) == 100);

  std::swap(w.obstacles[0], w.obstacles[1]);
  CHECK(render_frame(w, Pose::Identity(), cam) == img);
}

TEST_CASE("obstacles behind the camera are skipped") {
  const CameraModel cam;
  World w = uniform_world(50);
  w.obstacles.push_back(sphere_at(Vec3(-0.5, 0, 0), 0.2, 255));
  CHECK((render_frame(w, Pose::Identity(), cam).channels[1] == 50).all());
}

TEST_CASE("rendering is deterministic") {
  const CameraModel cam;
  World w;
  w.obstacles.push_back(sphere_at(Vec3(0.4, 0.02, 0.0), 0.06, 220));
  Pose pose = Pose::Identity();
  pose.translation() = Vec3(0.1, 0.0, 0.4);
  CHECK(render_frame(w, pose, cam) == render_frame(w, pose, cam));
}

TEST_CASE("tile pattern stays within the contrast band") {
  Background bg;
  bg.base = {60, 60, 60};
  bg.contrast = 15;
  int lo = 255, hi = 0;
  for (int i = -20; i < 20; ++i)
    for (int j = -20; j < 20; ++j) {
      const Rgb c = background_color(bg, 0.07 * i, 0.07 * j);
      CHECK(c[0] == c[1]);
      lo = std::min<int>(lo, c[0]);
      hi = std::max<int>(hi, c[0]);
    }
  CHECK(lo >= 45);
  CHECK(hi <= 75);
  CHECK(hi > lo);
  // constant within a tile
  CHECK(background_color(bg, 0.01, 0.01) == background_color(bg, 0.14, 0.14));
}
