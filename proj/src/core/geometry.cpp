#include "core/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace obdet {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
constexpr double kMinDepth = 1e-9;
}  // namespace

double CameraRig::pitch_rad() const { return pitch_deg * kDegToRad; }

void CameraRig::validate_optics() const {
  require(focal_px > 0.0, "focal_px must be positive");
  require(mount_height_m > 0.0, "mount_height_m must be positive");
  require(pitch_deg >= 0.0 && pitch_deg < 90.0, "pitch_deg must be in [0, 90)");
  require(image_width > 0 && image_height > 0, "image_size must be positive");
  require(principal_u > 0.0 && principal_u < image_width && principal_v > 0.0 &&
              principal_v < image_height,
          "principal_point must lie strictly inside image bounds");
}

void CameraRig::validate() const {
  validate_optics();
  require(baseline_m > 0.0, "baseline_m must be positive");
}

double focal_from_fov(int image_width_px, double horizontal_fov_deg) {
  require(image_width_px > 0, "image width must be positive");
  require(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0,
          "horizontal fov must be in (0, 180) degrees");
  return (image_width_px / 2.0) / std::tan(horizontal_fov_deg / 2.0 * kDegToRad);
}

VehiclePoint backproject(const CameraRig& rig, PixelCoord pixel, double depth_m) {
  require(depth_m > 0.0, "depth must be positive");
  require(pixel.u >= 0.0 && pixel.u < rig.image_width && pixel.v >= 0.0 &&
              pixel.v < rig.image_height,
          "pixel outside image bounds");
  const double X = (pixel.u - rig.principal_u) / rig.focal_px * depth_m;
  const double Y = (pixel.v - rig.principal_v) / rig.focal_px * depth_m;
  const double Z = depth_m;
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  return {X, rig.mount_height_m - Y * c - Z * s, -Y * s + Z * c};
}

PixelDepth project(const CameraRig& rig, const VehiclePoint& point) {
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  const double X = point.x;
  const double Y = c * (rig.mount_height_m - point.y) - s * point.z;
  const double Z = s * (rig.mount_height_m - point.y) + c * point.z;
  if (Z <= kMinDepth) throw Error(ErrorCode::BehindCamera, "point at or behind the camera plane");
  return {rig.principal_u + rig.focal_px * X / Z, rig.principal_v + rig.focal_px * Y / Z, Z};
}

PixelCoord rectify_to_level(const CameraRig& rig, PixelCoord pixel) {
  const double a = (pixel.u - rig.principal_u) / rig.focal_px;
  const double b = (pixel.v - rig.principal_v) / rig.focal_px;
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  // ray direction rotated into the level camera
  const double Xl = a;
  const double Yl = b * c + s;
  const double Zl = -b * s + c;
  if (Zl <= kMinDepth)
    throw Error(ErrorCode::UnrepresentablePixel, "pixel maps behind the virtual image plane");
  return {rig.principal_u + rig.focal_px * Xl / Zl, rig.principal_v + rig.focal_px * Yl / Zl};
}

PixelCoord unrectify_from_level(const CameraRig& rig, PixelCoord level_pixel) {
  const double a = (level_pixel.u - rig.principal_u) / rig.focal_px;
  const double b = (level_pixel.v - rig.principal_v) / rig.focal_px;
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  const double X = a;
  const double Y = b * c - s;
  const double Z = b * s + c;
  if (Z <= kMinDepth)
    throw Error(ErrorCode::UnrepresentablePixel, "level pixel maps behind the actual image plane");
  return {rig.principal_u + rig.focal_px * X / Z, rig.principal_v + rig.focal_px * Y / Z};
}

PixelDepth project_level(const CameraRig& rig, const VehiclePoint& point) {
  const double Z = point.z;
  if (Z <= kMinDepth) throw Error(ErrorCode::BehindCamera, "point at or behind the virtual camera plane");
  const double X = point.x;
  const double Y = rig.mount_height_m - point.y;
  return {rig.principal_u + rig.focal_px * X / Z, rig.principal_v + rig.focal_px * Y / Z, Z};
}

VehiclePoint backproject_level(const CameraRig& rig, PixelCoord level_pixel, double z_m) {
  require(z_m > 0.0, "depth must be positive");
  const double X = (level_pixel.u - rig.principal_u) / rig.focal_px * z_m;
  const double Y = (level_pixel.v - rig.principal_v) / rig.focal_px * z_m;
  return {X, rig.mount_height_m - Y, z_m};
}

std::optional<double> ground_depth(const CameraRig& rig, PixelCoord pixel) {
  const double b = (pixel.v - rig.principal_v) / rig.focal_px;
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  // vehicle-frame vertical component of the ray, per unit camera depth
  const double dy = -b * c - s;
  if (dy >= -1e-12) return std::nullopt;  // ray never descends to the ground
  return rig.mount_height_m / -dy;
}

CameraRig calibration_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("calibration JSON parse error: ") + e.what());
  }
  CameraRig rig;
  try {
    rig.focal_px = j.at("focal_px").get<double>();
    rig.principal_u = j.at("principal_point").at(0).get<double>();
    rig.principal_v = j.at("principal_point").at(1).get<double>();
    rig.image_width = j.at("image_size").at(0).get<int>();
    rig.image_height = j.at("image_size").at(1).get<int>();
    rig.baseline_m = j.at("baseline_m").get<double>();
    rig.mount_height_m = j.at("mount_height_m").get<double>();
    rig.pitch_deg = j.at("pitch_deg").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("calibration JSON missing/invalid field: ") + e.what());
  }
  rig.validate();
  return rig;
}

std::string calibration_to_json_text(const CameraRig& rig) {
  nlohmann::json j;
  j["focal_px"] = rig.focal_px;
  j["principal_point"] = {rig.principal_u, rig.principal_v};
  j["image_size"] = {rig.image_width, rig.image_height};
  j["baseline_m"] = rig.baseline_m;
  j["mount_height_m"] = rig.mount_height_m;
  j["pitch_deg"] = rig.pitch_deg;
  return j.dump(2) + "\n";
}

CameraRig load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open calibration file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return calibration_from_json_text(ss.str());
}

void save_calibration(const CameraRig& rig, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io_error("cannot write calibration file: " + path);
  out << calibration_to_json_text(rig);
}

}  // namespace obdet
