#include "neuroavoid/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace neuroavoid {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Smallest positive ray parameter hitting the obstacle, or infinity.
double intersect(const Obstacle& o, const Vec3& origin, const Vec3& dir) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (o.shape == ObstacleShape::sphere) {
    const Vec3 oc = origin - o.center;
    const double a = dir.squaredNorm();
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - o.radius * o.radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) return inf;
    const double sq = std::sqrt(disc);
    const double t0 = (-b - sq) / a;
    if (t0 > 0.0) return t0;
    const double t1 = (-b + sq) / a;
    return t1 > 0.0 ? t1 : inf;
  }
  double tmin = -inf, tmax = inf;
  for (int i = 0; i < 3; ++i) {
    const double lo = o.center[i] - o.half_extents[i];
    const double hi = o.center[i] + o.half_extents[i];
    if (dir[i] == 0.0) {
      if (origin[i] < lo || origin[i] > hi) return inf;
      continue;
    }
    double t1 = (lo - origin[i]) / dir[i];
    double t2 = (hi - origin[i]) / dir[i];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return inf;
  }
  if (tmin > 0.0) return tmin;
  return tmax > 0.0 ? tmax : inf;
}

}  // namespace

Rgb background_color(const Background& bg, double y, double z) {
  if (bg.kind == Background::Kind::uniform) return bg.base;
  const auto iy = static_cast<std::int64_t>(std::floor(y / bg.tile_size));
  const auto iz = static_cast<std::int64_t>(std::floor(z / bg.tile_size));
  const std::uint64_t h = mix(mix(bg.seed) ^ mix(static_cast<std::uint64_t>(iy) * 0x100000001b3ULL) ^
                              static_cast<std::uint64_t>(iz));
  const int span = 2 * bg.contrast + 1;
  const int offset = static_cast<int>(h % static_cast<std::uint64_t>(span)) - bg.contrast;
  Rgb out{};
  for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::clamp(bg.base[c] + offset, 0, 255));
  return out;
}

IntensityImage render_frame(const World& world, const Pose& camera_pose, const CameraModel& cam) {
  IntensityImage img(cam.height, cam.width);
  const Eigen::Matrix3d r = camera_pose.rotation();
  const Vec3 origin = camera_pose.translation();
  const int ss = cam.supersample;
  const int samples = ss * ss;

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      std::array<int, 3> acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double pu = u + (sx + 0.5) / ss - 0.5;
          const double pv = v + (sy + 0.5) / ss - 0.5;
          const Vec3 dir = r * Vec3(1.0, -(pu - cam.cx) / cam.focal_length, -(pv - cam.cy) / cam.focal_length);

          double best = std::numeric_limits<double>::infinity();
          const Obstacle* hit = nullptr;
          for (const auto& o : world.obstacles) {
            const double t = intersect(o, origin, dir);
            if (t < best) {
              best = t;
              hit = &o;
            }
          }
          Rgb color = world.background.base;
          if (hit != nullptr) {
            color = hit->color;
          } else if (dir.x() > 0.0) {
            const double t = (world.background.wall_x - origin.x()) / dir.x();
            if (t > 0.0) {
              const Vec3 p = origin + t * dir;
              color = background_color(world.background, p.y(), p.z());
            }
          }
          for (int c = 0; c < 3; ++c) acc[c] += color[c];
        }
      }
      for (int c = 0; c < 3; ++c)
        img.channels[c](v, u) = static_cast<std::uint8_t>((acc[c] + samples / 2) / samples);
    }
  }
  return img;
}

}  // namespace neuroavoid
