#pragma once

#include <optional>
#include <string>

#include "core/error.hpp"

namespace obdet {

// Stereo rig model. One pinhole intrinsics block shared by both cameras,
// images assumed rectified (horizontal epipolar lines), zero roll/yaw, pitch
// tilting the optical axis downward from the horizon.
//
// Vehicle frame: origin on the ground directly beneath the left optical
// center, x right, y up, z forward. Camera frame: x right, y down (image v),
// z along the optical axis. The left optical center sits at (0, mount_height_m, 0).
struct CameraRig {
  double focal_px = 0.0;
  double principal_u = 0.0;
  double principal_v = 0.0;
  int image_width = 0;
  int image_height = 0;
  double baseline_m = 0.0;
  double mount_height_m = 0.0;
  double pitch_deg = 0.0;  // positive = tilted downward

  double pitch_rad() const;
  void validate() const;         // throws InvalidArgument when an invariant is broken
  void validate_optics() const;  // same, minus the baseline (mono / degenerate rigs)
};

// Point in the vehicle frame, meters.
struct VehiclePoint {
  double x = 0.0;  // lateral, right positive
  double y = 0.0;  // height above ground, up positive
  double z = 0.0;  // forward range from the camera foot point
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Projection result: pixel plus camera-frame depth (distance along the
// optical axis, the quantity disparity encodes).
struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth_m = 0.0;
};

// Axis-aligned rectangle in (level-rectified) image pixels, u0<=u1, v0<=v1.
struct RectPx {
  double u0 = 0.0, v0 = 0.0, u1 = 0.0, v1 = 0.0;

  double width() const { return u1 - u0; }
  double height() const { return v1 - v0; }
  bool degenerate() const { return !(u0 < u1 && v0 < v1); }
};

// focal length from image width and horizontal field of view
double focal_from_fov(int image_width_px, double horizontal_fov_deg);

// Pixel + camera-frame depth -> vehicle-frame point. depth_m must be positive
// and the pixel inside image bounds.
VehiclePoint backproject(const CameraRig& rig, PixelCoord pixel, double depth_m);

// Vehicle-frame point -> pixel + depth. The pixel may fall outside image
// bounds (caller clips); throws BehindCamera if the point is at or behind the
// camera plane.
PixelDepth project(const CameraRig& rig, const VehiclePoint& point);

// Pitch-removing homography to a zero-pitch virtual camera with identical
// intrinsics. Annotation rectangles live in this level-rectified space.
// Throws UnrepresentablePixel when the ray maps to/behind the virtual image
// plane horizon.
PixelCoord rectify_to_level(const CameraRig& rig, PixelCoord pixel);
PixelCoord unrectify_from_level(const CameraRig& rig, PixelCoord level_pixel);

// Projection through the zero-pitch virtual camera (same optical center).
// For a level camera the returned depth equals the vehicle-frame z.
PixelDepth project_level(const CameraRig& rig, const VehiclePoint& point);
VehiclePoint backproject_level(const CameraRig& rig, PixelCoord level_pixel, double z_m);

// Camera-frame depth at which the pixel ray meets the ground plane y=0, or
// nullopt for rays that never reach it.
std::optional<double> ground_depth(const CameraRig& rig, PixelCoord pixel);

// Calibration JSON: {"focal_px", "principal_point":[u0,v0], "image_size":[w,h],
// "baseline_m", "mount_height_m", "pitch_deg"}.
CameraRig calibration_from_json_text(const std::string& text);
std::string calibration_to_json_text(const CameraRig& rig);
CameraRig load_calibration(const std::string& path);
void save_calibration(const CameraRig& rig, const std::string& path);

}  // namespace obdet
