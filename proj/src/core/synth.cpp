#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/noise.hpp"

namespace obdet {

void SceneSpec::validate() const {
  for (const BoxSpec& b : boxes) {
    require(b.width_m > 0.0 && b.depth_m > 0.0 && b.height_m > 0.0,
            "box dimensions must be positive");
    require(b.center_z_m - b.depth_m / 2.0 > 0.0, "box front face must be at z > 0");
  }
}

void NoiseSpec::validate() const {
  require(dropout_prob >= 0.0 && dropout_prob <= 1.0, "dropout_prob must be in [0, 1]");
  require(reflection_prob >= 0.0 && reflection_prob <= 1.0, "reflection_prob must be in [0, 1]");
  require(depth_sigma_m >= 0.0, "depth_sigma_m must be >= 0");
}

namespace {

constexpr double kMinHit = 1e-9;

// Ray parameterized by camera-frame depth t:
// position(t) = (ox + dx*t, oy + dy*t, oz + dz*t) in the vehicle frame.
struct PixelRay {
  double ox, oy, oz;
  double dx, dy, dz;
};

// pitch trig, hoisted out of the per-pixel loops
struct RigTrig {
  double c, s;
  explicit RigTrig(const CameraRig& rig)
      : c(std::cos(rig.pitch_rad())), s(std::sin(rig.pitch_rad())) {}
};

PixelRay make_ray(const CameraRig& rig, const RigTrig& t, double camera_x_m, double u, double v) {
  const double a = (u - rig.principal_u) / rig.focal_px;
  const double b = (v - rig.principal_v) / rig.focal_px;
  return {camera_x_m, rig.mount_height_m, 0.0, a, -(b * t.c + t.s), t.c - b * t.s};
}

// t-interval where o + d*t stays inside [lo, hi]; empty -> lo > hi on return.
void clip_slab(double o, double d, double lo, double hi, double& t_lo, double& t_hi) {
  if (std::abs(d) < 1e-15) {
    if (o < lo || o > hi) {
      t_lo = 1.0;
      t_hi = 0.0;
    }
    return;
  }
  double t1 = (lo - o) / d, t2 = (hi - o) / d;
  if (t1 > t2) std::swap(t1, t2);
  t_lo = std::max(t_lo, t1);
  t_hi = std::min(t_hi, t2);
}

bool hit_box(const PixelRay& ray, const BoxSpec& box, double& t_entry) {
  double t_lo = kMinHit, t_hi = std::numeric_limits<double>::infinity();
  clip_slab(ray.ox, ray.dx, box.center_x_m - box.width_m / 2.0,
            box.center_x_m + box.width_m / 2.0, t_lo, t_hi);
  clip_slab(ray.oy, ray.dy, 0.0, box.height_m, t_lo, t_hi);
  clip_slab(ray.oz, ray.dz, box.center_z_m - box.depth_m / 2.0,
            box.center_z_m + box.depth_m / 2.0, t_lo, t_hi);
  if (t_lo > t_hi) return false;
  t_entry = t_lo;
  return true;
}

RayHit nearest_hit(const SceneSpec& scene, const PixelRay& ray, bool include_ground) {
  RayHit hit;
  double best = std::numeric_limits<double>::infinity();
  if (include_ground && ray.dy < -1e-12) {
    const double t = ray.oy / -ray.dy;
    if (t > kMinHit) {
      best = t;
      hit = {kGroundId, t};
    }
  }
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    double t = 0.0;
    if (hit_box(ray, scene.boxes[i], t) && t < best) {
      best = t;
      hit = {static_cast<int>(i) + 1, t};
    }
  }
  return hit;
}

constexpr double kHighFreqPerM = 8.0;  // base lattice 12.5 cm, finest octave ~3 cm
constexpr double kLowFreqPerM = 0.5;   // texture-poor: finest octave 50 cm
constexpr int kOctaves = 3;
constexpr double kContrast = 3.0;

std::uint8_t texture_gray(const SceneSpec& scene, int object_id, double x, double y, double z) {
  const std::uint64_t seed = hash_mix(scene.texture_seed, static_cast<std::uint64_t>(object_id));
  const double freq = scene.low_freq_texture ? kLowFreqPerM : kHighFreqPerM;
  const double v = fbm3(seed, x, y, z, kOctaves, freq);
  const long g = std::lround(255.0 * (0.5 + kContrast * (v - 0.5)));
  return static_cast<std::uint8_t>(std::clamp(g, 0L, 255L));
}

constexpr std::uint8_t kSkyGray = 96;

std::uint8_t shade_hit(const SceneSpec& scene, const PixelRay& ray, const RayHit& hit) {
  if (hit.id == kSkyId) return kSkyGray;
  const double x = ray.ox + ray.dx * hit.t;
  const double y = ray.oy + ray.dy * hit.t;
  const double z = ray.dz * hit.t;
  const std::uint8_t base = texture_gray(scene, hit.id, x, y, z);
  if (hit.id != kGroundId || !scene.reflective_floor || scene.boxes.empty()) return base;
  // mirror the ray off the floor; if it meets a box, blend that box's texture
  // in, giving both views a consistent virtual image below the ground
  const PixelRay mirrored{x, y, z, ray.dx, -ray.dy, ray.dz};
  RayHit reflection;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    double t = 0.0;
    if (hit_box(mirrored, scene.boxes[i], t) && t < best) {
      best = t;
      reflection = {static_cast<int>(i) + 1, t};
    }
  }
  if (reflection.id == kSkyId) return base;
  const double rx = mirrored.ox + mirrored.dx * reflection.t;
  const double ry = mirrored.oy + mirrored.dy * reflection.t;
  const double rz = mirrored.oz + mirrored.dz * reflection.t;
  const std::uint8_t mirror_gray = texture_gray(scene, reflection.id, rx, ry, rz);
  return static_cast<std::uint8_t>((base + mirror_gray + 1) / 2);
}

}  // namespace

RayHit cast_pixel_ray(const SceneSpec& scene, const CameraRig& rig, double camera_x_m,
                      double u, double v) {
  return nearest_hit(scene, make_ray(rig, RigTrig(rig), camera_x_m, u, v), true);
}

SceneRaster raster_scene(const SceneSpec& scene, const CameraRig& rig, double camera_x_m) {
  scene.validate();
  rig.validate_optics();
  const RigTrig trig(rig);
  SceneRaster raster;
  raster.depth_t = Image<float>(rig.image_width, rig.image_height, 0.0f);
  raster.object_id = Image<std::int32_t>(rig.image_width, rig.image_height, kSkyId);
  for (int v = 0; v < rig.image_height; ++v) {
    float* drow = raster.depth_t.row(v);
    std::int32_t* irow = raster.object_id.row(v);
    for (int u = 0; u < rig.image_width; ++u) {
      const RayHit hit = nearest_hit(scene, make_ray(rig, trig, camera_x_m, u, v), true);
      if (hit.id == kSkyId) continue;
      drow[u] = static_cast<float>(hit.t);
      irow[u] = hit.id;
    }
  }
  return raster;
}

DepthMap render_depth(const SceneSpec& scene, const CameraRig& rig) {
  const SceneRaster raster = raster_scene(scene, rig, 0.0);
  DepthMap depth(rig.image_width, rig.image_height, 0.0);
  float far_clip = 0.0f;
  for (int v = 0; v < rig.image_height; ++v) {
    const float* in = raster.depth_t.row(v);
    float* out = depth.px.row(v);
    for (int u = 0; u < rig.image_width; ++u) {
      out[u] = in[u];
      far_clip = std::max(far_clip, in[u]);
    }
  }
  depth.far_clip_m = far_clip;
  return depth;
}

StereoRender render_stereo_pair(const SceneSpec& scene, const CameraRig& rig) {
  scene.validate();
  rig.validate_optics();
  require(rig.baseline_m >= 0.0, "baseline_m must be >= 0");
  const int W = rig.image_width, H = rig.image_height;
  const double B = rig.baseline_m;

  StereoRender out;
  out.left = ImageGray(W, H);
  out.right = ImageGray(W, H);
  out.true_disparity = DisparityMap(W, H);
  out.non_occluded = Image<std::uint8_t>(W, H, 0);

  const RigTrig trig(rig);
  const SceneRaster left = raster_scene(scene, rig, 0.0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const PixelRay ray = make_ray(rig, trig, B, u, v);
      out.right.at(u, v) = shade_hit(scene, ray, nearest_hit(scene, ray, true));
    }
  }
  const double fb = rig.focal_px * B;
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const PixelRay ray = make_ray(rig, trig, 0.0, u, v);
      const RayHit hit{left.object_id.at(u, v), left.depth_t.at(u, v)};
      out.left.at(u, v) = shade_hit(scene, ray, hit);
      if (hit.id == kSkyId) continue;
      const double d = fb / hit.t;
      out.true_disparity.px.at(u, v) = static_cast<float>(d);
      // visible from the right camera iff nothing sits closer on the right ray
      const double ur = u - d;
      if (ur < 0.0 || ur > W - 1.0) continue;
      const RayHit rhit = nearest_hit(scene, make_ray(rig, trig, B, ur, v), true);
      if (rhit.id != kSkyId && rhit.t >= hit.t - 1e-7 * (1.0 + hit.t))
        out.non_occluded.at(u, v) = 1;
    }
  }
  return out;
}

DepthMap corrupt(const DepthMap& depth, const NoiseSpec& noise, const CameraRig& rig) {
  noise.validate();
  require(depth.width() == rig.image_width && depth.height() == rig.image_height,
          "depth map dimensions do not match the camera rig");
  DepthMap out(depth.width(), depth.height(), depth.far_clip_m);
  float far_clip = static_cast<float>(depth.far_clip_m);
  for (int v = 0; v < depth.height(); ++v) {
    const float* in = depth.px.row(v);
    float* dst = out.px.row(v);
    for (int u = 0; u < depth.width(); ++u) {
      if (!(in[u] > 0.0f)) continue;
      const std::uint64_t idx = static_cast<std::uint64_t>(v) * depth.width() + u;
      if (noise.dropout_prob > 0.0 && u01(stream_draw(noise.seed, idx, 0)) < noise.dropout_prob)
        continue;
      double d = in[u];
      if (noise.depth_sigma_m > 0.0) d += noise.depth_sigma_m * gaussian01(noise.seed, idx, 1);
      if (noise.reflection_prob > 0.0) {
        const std::optional<double> ground = ground_depth(rig, {double(u), double(v)});
        if (ground && std::abs(in[u] - *ground) < 1e-3 * (1.0 + *ground) &&
            u01(stream_draw(noise.seed, idx, 4)) < noise.reflection_prob) {
          const double mag = 0.1 + 0.9 * u01(stream_draw(noise.seed, idx, 5));
          d = *ground * (1.0 + mag);
        }
      }
      if (d <= 0.0) continue;  // noise pushed the sample out of range
      dst[u] = static_cast<float>(d);
      far_clip = std::max(far_clip, dst[u]);
    }
  }
  out.far_clip_m = far_clip;
  return out;
}

FrameAnnotation annotate(const SceneSpec& scene, const CameraRig& rig) {
  scene.validate();
  rig.validate_optics();
  const SceneRaster raster = raster_scene(scene, rig, 0.0);
  std::vector<char> visible(scene.boxes.size() + 1, 0);
  for (int v = 0; v < rig.image_height; ++v)
    for (int u = 0; u < rig.image_width; ++u) {
      const std::int32_t id = raster.object_id.at(u, v);
      if (id > 0) visible[id] = 1;
    }

  FrameAnnotation ann;
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    if (!visible[i + 1]) continue;
    const BoxSpec& box = scene.boxes[i];
    const double z_front = box.center_z_m - box.depth_m / 2.0;
    const double xl = box.center_x_m - box.width_m / 2.0;
    const double xr = box.center_x_m + box.width_m / 2.0;
    const PixelDepth tl = project_level(rig, {xl, box.height_m, z_front});
    const PixelDepth br = project_level(rig, {xr, 0.0, z_front});
    MarkedObstacle marked;
    marked.rect_px = {tl.u, tl.v, br.u, br.v};
    marked.z_ref_m = z_front;
    ann.marked.push_back(marked);
  }
  return ann;
}

}  // namespace obdet
