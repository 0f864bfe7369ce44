#include "neuroavoid/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroavoid {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: width and height must be > 0");
  if (!(focal_length > 0.0)) throw std::invalid_argument("camera: focal length must be > 0");
  if (supersample < 1) throw std::invalid_argument("camera: supersample must be >= 1");
  const Eigen::Matrix3d r = mount.rotation();
  if (!(r.transpose() * r).isIdentity(1e-9) || std::abs(r.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("camera: mount rotation must be orthonormal with det +1");
}

void Obstacle::validate() const {
  if (!finite(start)) throw std::invalid_argument("obstacle: non-finite position");
  if (shape == ObstacleShape::sphere && !(radius > 0.0))
    throw std::invalid_argument("obstacle: sphere radius must be > 0");
  if (shape == ObstacleShape::box && !(half_extents.array() > 0.0).all())
    throw std::invalid_argument("obstacle: box half extents must be > 0");
  if (motion) {
    if (motion->speed < 0.0) throw std::invalid_argument("obstacle: speed must be >= 0");
    if (std::abs(motion->direction.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("obstacle: path direction must be unit-norm");
  }
}

void Scenario::validate() const {
  if (task < 1 || task > 4) throw std::invalid_argument("scenario " + id + ": task must be 1..4");
  if (!finite(start) || !finite(goal)) throw std::invalid_argument("scenario " + id + ": non-finite start/goal");
  if (task == 4) {
    if ((goal - start).norm() > 1e-12)
      throw std::invalid_argument("scenario " + id + ": task 4 requires goal == start");
  } else if ((goal - start).norm() < 1e-9) {
    throw std::invalid_argument("scenario " + id + ": start and goal coincide");
  }
  if (background.tile_size <= 0.0) throw std::invalid_argument("scenario " + id + ": tile size must be > 0");
  for (const auto& o : obstacles) o.validate();
}

World make_world(const Scenario& scenario) {
  World w;
  w.trigger_time = scenario.trigger_time;
  w.background = scenario.background;
  w.obstacles = scenario.obstacles;
  for (auto& o : w.obstacles) o.center = obstacle_position(o, 0.0, w.trigger_time);
  return w;
}

Vec3 obstacle_position(const Obstacle& obstacle, double time, double trigger_time) {
  if (!obstacle.is_dynamic()) return obstacle.start;
  const auto& path = *obstacle.motion;
  const double travel = std::min(path.max_travel, path.speed * std::max(0.0, time - trigger_time));
  return obstacle.start + path.direction * travel;
}

World step_world(World world, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_world: dt must be > 0");
  world.time += dt;
  for (auto& o : world.obstacles) {
    if (o.is_dynamic()) o.center = obstacle_position(o, world.time, world.trigger_time);
  }
  return world;
}

Pose camera_pose_from_ee(const Pose& ee_pose, const CameraModel& cam) { return ee_pose * cam.mount; }

double distance_to_obstacle(const Vec3& point, const Obstacle& obstacle) {
  if (obstacle.shape == ObstacleShape::sphere)
    return std::max(0.0, (point - obstacle.center).norm() - obstacle.radius);
  const Eigen::Array3d d = (point - obstacle.center).cwiseAbs().array() - obstacle.half_extents.array();
  return d.max(0.0).matrix().norm();
}

bool check_collision(const Vec3& ee_pos, double ee_radius, const std::vector<Obstacle>& obstacles) {
  if (ee_radius < 0.0) throw std::invalid_argument("check_collision: radius must be >= 0");
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const Obstacle& o) {
    if (o.shape == ObstacleShape::sphere) return (ee_pos - o.center).norm() <= o.radius + ee_radius;
    return distance_to_obstacle(ee_pos, o) <= ee_radius;
  });
}

std::optional<Eigen::Vector2d> project(const CameraModel& cam, const Vec3& p) {
  if (p.x() <= 0.0) return std::nullopt;
  return Eigen::Vector2d(cam.cx - cam.focal_length * p.y() / p.x(),
                         cam.cy - cam.focal_length * p.z() / p.x());
}

}  // namespace neuroavoid
