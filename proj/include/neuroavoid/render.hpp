#pragma once

#include "neuroavoid/image.hpp"
#include "neuroavoid/scene.hpp"

namespace neuroavoid {

/// Flat-shaded ray-cast of the world as seen from camera_pose.
/// Obstacles are drawn in their surface colour with nearest-hit depth order;
/// everything else shows the background wall pattern.
IntensityImage render_frame(const World& world, const Pose& camera_pose, const CameraModel& cam);

/// Background intensity at a world point on the wall plane.
Rgb background_color(const Background& bg, double y, double z);

}  // namespace neuroavoid
