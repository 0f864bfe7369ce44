#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace neuroavoid {

using Vec3 = Eigen::Vector3d;
/// Rigid transform; rotation part must stay orthonormal with det +1.
using Pose = Eigen::Isometry3d;
using Rgb = std::array<std::uint8_t, 3>;

/*
 * Frames: world and end-effector share the convention x forward, y left,
 * z up. The camera frame uses the same axes with x along the optical axis,
 * so the image plane is parallel to the y-z plane. Pixel column u grows
 * towards -y and pixel row v grows towards -z:
 *
 *   u = cx - f * y / x,   v = cy - f * z / x
 */
struct CameraModel {
  int width = 160;
  int height = 120;
  double focal_length = 80.0;
  double cx = 79.5;
  double cy = 59.5;
  Pose mount = Pose::Identity();
  /// Samples per pixel side used by the rasterizer.
  int supersample = 2;

  void validate() const;
};

enum class ObstacleShape { sphere, box };

struct LinearPath {
  Vec3 direction = Vec3::UnitY();
  double speed = 0.0;
  /// Distance after which the obstacle stops; infinite by default.
  double max_travel = std::numeric_limits<double>::infinity();
};

struct Obstacle {
  ObstacleShape shape = ObstacleShape::sphere;
  /// Position at trial start (and at the trigger time for moving obstacles).
  Vec3 start = Vec3::Zero();
  /// Current position, advanced by step_world.
  Vec3 center = Vec3::Zero();
  double radius = 0.05;
  Vec3 half_extents = Vec3::Constant(0.05);
  Rgb color{220, 220, 220};
  std::optional<LinearPath> motion;

  void validate() const;
  bool is_dynamic() const { return motion.has_value() && motion->speed > 0.0; }
};

struct Background {
  enum class Kind { uniform, tiles };
  Kind kind = Kind::tiles;
  Rgb base{60, 60, 60};
  /// Peak per-tile deviation from the base intensity.
  int contrast = 30;
  double tile_size = 0.15;
  /// World x of the fronto-parallel wall carrying the pattern.
  double wall_x = 1.6;
  std::uint64_t seed = 7;
};

struct Scenario {
  std::string id;
  int task = 1;
  Background background;
  std::vector<Obstacle> obstacles;
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  /// Dynamic obstacles begin moving at this time (seconds).
  double trigger_time = 0.0;
  /// Trials never end before this time, even when the goal is reached.
  double min_duration = 0.0;

  /// Throws std::invalid_argument when the scenario is inconsistent.
  void validate() const;
};

struct World {
  double time = 0.0;
  double trigger_time = 0.0;
  Background background;
  std::vector<Obstacle> obstacles;
};

World make_world(const Scenario& scenario);

/// Advances dynamic obstacles along their paths; static obstacles are untouched.
World step_world(World world, double dt);

/// Closed-form obstacle position at an absolute time.
Vec3 obstacle_position(const Obstacle& obstacle, double time, double trigger_time);

/// Pinhole camera frame of the end-effector.
Pose camera_pose_from_ee(const Pose& ee_pose, const CameraModel& cam);

/// Euclidean distance from a point to an obstacle surface (0 inside).
double distance_to_obstacle(const Vec3& point, const Obstacle& obstacle);

bool check_collision(const Vec3& ee_pos, double ee_radius,
                     const std::vector<Obstacle>& obstacles);

/// Projects a camera-frame point; nullopt when it lies behind the camera.
std::optional<Eigen::Vector2d> project(const CameraModel& cam, const Vec3& point_cam);

}  // namespace neuroavoid
