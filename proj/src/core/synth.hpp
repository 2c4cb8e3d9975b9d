#pragma once

#include <cstdint>
#include <vector>

#include "core/evaluator.hpp"
#include "core/geometry.hpp"
#include "core/image.hpp"

namespace obdet {

// Axis-aligned box resting on the ground plane, vehicle frame:
// x in center_x +- width/2, z in center_z +- depth/2, y in [0, height].
struct BoxSpec {
  double center_x_m = 0.0;
  double center_z_m = 0.0;
  double width_m = 0.0;
  double depth_m = 0.0;
  double height_m = 0.0;
};

struct SceneSpec {
  std::vector<BoxSpec> boxes;
  bool reflective_floor = false;  // ground mirrors box texture into both views
  std::uint64_t texture_seed = 0;
  bool low_freq_texture = false;  // texture-poor variant of the same scene

  void validate() const;  // positive dimensions, front faces at z > 0
};

struct NoiseSpec {
  double dropout_prob = 0.0;     // per-pixel invalidation probability
  double depth_sigma_m = 0.0;    // additive Gaussian depth noise
  double reflection_prob = 0.0;  // ground pixel -> mirrored below-floor depth
  std::uint64_t seed = 0;

  void validate() const;
};

// Object ids in the raster: -1 sky (no hit), 0 ground, 1+i for boxes[i].
constexpr int kSkyId = -1;
constexpr int kGroundId = 0;

struct RayHit {
  int id = kSkyId;
  double t = 0.0;  // camera-frame depth (Z) of the hit
};

// Nearest ray-scene intersection for the pixel ray of a camera displaced
// camera_x_m along the baseline. Pixel coordinates may be fractional.
RayHit cast_pixel_ray(const SceneSpec& scene, const CameraRig& rig, double camera_x_m,
                      double u, double v);

// Per-pixel nearest-hit depth and object id for a whole view.
struct SceneRaster {
  Image<float> depth_t;           // camera-frame depth, 0 where sky
  Image<std::int32_t> object_id;  // kSkyId where sky
};

SceneRaster raster_scene(const SceneSpec& scene, const CameraRig& rig, double camera_x_m);

// Ground-truth depth map of the left camera; sky pixels invalid.
DepthMap render_depth(const SceneSpec& scene, const CameraRig& rig);

struct StereoRender {
  ImageGray left, right;
  DisparityMap true_disparity;        // left-based, focal*baseline/depth
  Image<std::uint8_t> non_occluded;   // left pixels also visible from the right camera
};

// Both views rendered by casting rays against the same world-anchored
// procedural texture, so corresponding pixels see identical intensity values
// without any image-space warping.
StereoRender render_stereo_pair(const SceneSpec& scene, const CameraRig& rig);

// Sensor-degradation model: dropout, additive Gaussian depth noise, and
// reflective-floor artifacts that push ground pixels to a mirrored
// below-floor depth d' = d_ground * (1 + u), u ~ U(0.1, 1). Every draw is
// keyed by (seed, pixel index), so the output is bit-reproducible at any
// worker count. far_clip_m grows if a perturbed value exceeds it.
DepthMap corrupt(const DepthMap& depth, const NoiseSpec& noise, const CameraRig& rig);

// Ground truth markup: one MarkedObstacle per box visible in the left view,
// rect_px = level-rectified bounding rectangle of the front face, z_ref =
// front-face distance. frame_id is left empty for the caller to fill.
FrameAnnotation annotate(const SceneSpec& scene, const CameraRig& rig);

}  // namespace obdet
