#include "core/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace obdet {

void DetectorParams::validate() const {
  require(cutoff_height_m > 0.0, "cutoff_height_m must be positive");
  require(tilt_allowance_deg >= 0.0 && tilt_allowance_deg < 45.0,
          "tilt_allowance_deg must be in [0, 45)");
  require(cell_size_m > 0.0, "cell_size_m must be positive");
  require(min_points_per_cell >= 1, "min_points_per_cell must be >= 1");
  require(closing_kernel_cells >= 1 && closing_kernel_cells % 2 == 1,
          "closing_kernel_cells must be odd and >= 1");
  require(min_area_cells >= 1, "min_area_cells must be >= 1");
  require(max_range_m > 0.0, "max_range_m must be positive");
  require(grid_half_width_m > 0.0, "grid_half_width_m must be positive");
}

std::vector<VehiclePoint> cut_road_plane(const std::vector<VehiclePoint>& points,
                                         const DetectorParams& params) {
  params.validate();
  const double slope = std::tan(params.tilt_allowance_deg * 0.017453292519943295);
  std::vector<VehiclePoint> kept;
  kept.reserve(points.size() / 4);
  for (const VehiclePoint& p : points)
    if (std::abs(p.y) > params.cutoff_height_m + p.z * slope) kept.push_back(p);
  return kept;
}

OccupancyImage build_occupancy(const std::vector<VehiclePoint>& points,
                               const DetectorParams& params) {
  params.validate();
  OccupancyImage img;
  img.cell_size_m = params.cell_size_m;
  img.origin_x_m = -params.grid_half_width_m;
  img.nx = static_cast<int>(std::ceil(2.0 * params.grid_half_width_m / params.cell_size_m));
  img.nz = static_cast<int>(std::ceil(params.max_range_m / params.cell_size_m));
  const std::size_t n = static_cast<std::size_t>(img.nx) * img.nz;
  img.count.assign(n, 0);
  img.nearest_z.assign(n, std::numeric_limits<float>::infinity());
  img.y_min.assign(n, std::numeric_limits<float>::infinity());
  img.y_max.assign(n, -std::numeric_limits<float>::infinity());
  img.occupied.assign(n, 0);

  for (const VehiclePoint& p : points) {
    if (!(p.z > 0.0) || p.z > params.max_range_m) {
      ++img.dropped_points;
      continue;
    }
    const int cx = static_cast<int>(std::floor((p.x - img.origin_x_m) / params.cell_size_m));
    if (cx < 0 || cx >= img.nx) {
      ++img.dropped_points;
      continue;
    }
    const int cz = std::min(static_cast<int>(std::floor(p.z / params.cell_size_m)), img.nz - 1);
    const std::size_t i = img.idx(cx, cz);
    ++img.count[i];
    img.nearest_z[i] = std::min(img.nearest_z[i], static_cast<float>(p.z));
    img.y_min[i] = std::min(img.y_min[i], static_cast<float>(p.y));
    img.y_max[i] = std::max(img.y_max[i], static_cast<float>(p.y));
  }
  for (std::size_t i = 0; i < n; ++i)
    img.occupied[i] = img.count[i] >= params.min_points_per_cell ? 1 : 0;
  return img;
}

OccupancyImage close_morphological(const OccupancyImage& img, const DetectorParams& params) {
  params.validate();
  OccupancyImage out = img;
  const int r = params.closing_kernel_cells / 2;
  if (r == 0) return out;

  // dilate into a buffer padded by the kernel radius, so the erosion below
  // yields the unbounded-plane closing restricted to the grid
  const int pw = img.nx + 2 * r, ph = img.nz + 2 * r;
  std::vector<std::uint8_t> dil(static_cast<std::size_t>(pw) * ph, 0);
  for (int pz = 0; pz < ph; ++pz) {
    for (int px = 0; px < pw; ++px) {
      std::uint8_t any = 0;
      for (int dz = -r; dz <= r && !any; ++dz) {
        const int cz = pz - r + dz;
        if (cz < 0 || cz >= img.nz) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int cx = px - r + dx;
          if (cx >= 0 && cx < img.nx && img.occupied[img.idx(cx, cz)]) {
            any = 1;
            break;
          }
        }
      }
      dil[static_cast<std::size_t>(pz) * pw + px] = any;
    }
  }
  for (int cz = 0; cz < img.nz; ++cz) {
    for (int cx = 0; cx < img.nx; ++cx) {
      std::uint8_t all = 1;
      for (int dz = -r; dz <= r && all; ++dz)
        for (int dx = -r; dx <= r; ++dx)
          if (!dil[static_cast<std::size_t>(cz + r + dz) * pw + (cx + r + dx)]) {
            all = 0;
            break;
          }
      out.occupied[out.idx(cx, cz)] = all;
    }
  }
  return out;
}

std::vector<DetectedObstacle> extract_obstacles(const OccupancyImage& img,
                                                const DetectorParams& params,
                                                const CameraRig& rig) {
  params.validate();
  std::vector<DetectedObstacle> result;
  if (img.nx == 0 || img.nz == 0) return result;
  std::vector<std::uint8_t> visited(img.occupied.size(), 0);
  std::vector<CellIndex> stack;

  for (int cz0 = 0; cz0 < img.nz; ++cz0) {
    for (int cx0 = 0; cx0 < img.nx; ++cx0) {
      const std::size_t i0 = img.idx(cx0, cz0);
      if (!img.occupied[i0] || visited[i0]) continue;

      std::vector<CellIndex> cells;
      visited[i0] = 1;
      stack.assign(1, {cx0, cz0});
      while (!stack.empty()) {
        const CellIndex c = stack.back();
        stack.pop_back();
        cells.push_back(c);
        for (int dz = -1; dz <= 1; ++dz)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = c.cx + dx, nz = c.cz + dz;
            if (!img.in_grid(nx, nz)) continue;
            const std::size_t ni = img.idx(nx, nz);
            if (img.occupied[ni] && !visited[ni]) {
              visited[ni] = 1;
              stack.push_back({nx, nz});
            }
          }
      }
      if (static_cast<int>(cells.size()) < params.min_area_cells) continue;

      DetectedObstacle obs;
      obs.area_cells = static_cast<int>(cells.size());
      int cx_min = img.nx, cx_max = -1;
      double z_exp = std::numeric_limits<double>::infinity();
      double y_bottom = std::numeric_limits<double>::infinity();
      double y_top = -std::numeric_limits<double>::infinity();
      bool has_stats = false;
      for (const CellIndex& c : cells) {
        cx_min = std::min(cx_min, c.cx);
        cx_max = std::max(cx_max, c.cx);
        const std::size_t i = img.idx(c.cx, c.cz);
        if (img.count[i] > 0) {
          has_stats = true;
          z_exp = std::min(z_exp, static_cast<double>(img.nearest_z[i]));
          y_bottom = std::min(y_bottom, static_cast<double>(img.y_min[i]));
          y_top = std::max(y_top, static_cast<double>(img.y_max[i]));
        }
      }
      if (!has_stats) continue;  // closing produced a component with no source points
      obs.z_exp_m = z_exp;
      obs.x_left_m = img.origin_x_m + cx_min * img.cell_size_m;
      obs.x_right_m = img.origin_x_m + (cx_max + 1) * img.cell_size_m;
      obs.y_bottom_m = y_bottom;
      obs.y_top_m = y_top > y_bottom ? y_top : y_bottom + img.cell_size_m;
      std::sort(cells.begin(), cells.end(),
                [](const CellIndex& a, const CellIndex& b) {
                  return a.cz != b.cz ? a.cz < b.cz : a.cx < b.cx;
                });
      obs.footprint = std::move(cells);

      const PixelDepth tl = project_level(rig, {obs.x_left_m, obs.y_top_m, obs.z_exp_m});
      const PixelDepth br = project_level(rig, {obs.x_right_m, obs.y_bottom_m, obs.z_exp_m});
      obs.rect_px = {tl.u, tl.v, br.u, br.v};
      result.push_back(std::move(obs));
    }
  }
  std::sort(result.begin(), result.end(), [](const DetectedObstacle& a, const DetectedObstacle& b) {
    if (a.z_exp_m != b.z_exp_m) return a.z_exp_m < b.z_exp_m;
    if (a.x_left_m != b.x_left_m) return a.x_left_m < b.x_left_m;
    return a.y_bottom_m < b.y_bottom_m;
  });
  return result;
}

std::vector<DetectedObstacle> detect(const DepthMap& depth, const CameraRig& rig,
                                     const DetectorParams& params) {
  params.validate();
  rig.validate_optics();
  require(depth.width() == rig.image_width && depth.height() == rig.image_height,
          "depth map dimensions do not match the camera rig");

  // backproject(rig, {u, v}, d) with the per-pixel trig hoisted out
  const double c = std::cos(rig.pitch_rad()), s = std::sin(rig.pitch_rad());
  std::vector<VehiclePoint> cloud;
  cloud.reserve(static_cast<std::size_t>(depth.width()) * depth.height() / 4);
  for (int v = 0; v < depth.height(); ++v) {
    const float* row = depth.px.row(v);
    for (int u = 0; u < depth.width(); ++u) {
      if (!(row[u] > 0.0f)) continue;
      const double d = row[u];
      const double X = (u - rig.principal_u) / rig.focal_px * d;
      const double Y = (v - rig.principal_v) / rig.focal_px * d;
      cloud.push_back({X, rig.mount_height_m - Y * c - d * s, -Y * s + d * c});
    }
  }
  const std::vector<VehiclePoint> kept = cut_road_plane(cloud, params);
  const OccupancyImage occ = build_occupancy(kept, params);
  const OccupancyImage closed = close_morphological(occ, params);
  return extract_obstacles(closed, params, rig);
}

std::string detections_to_json_text(const std::vector<DetectedObstacle>& obstacles) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DetectedObstacle& o : obstacles) {
    nlohmann::json j;
    j["z_exp_m"] = o.z_exp_m;
    j["x_span_m"] = {o.x_left_m, o.x_right_m};
    j["y_span_m"] = {o.y_bottom_m, o.y_top_m};
    j["rect_px"] = {o.rect_px.u0, o.rect_px.v0, o.rect_px.u1, o.rect_px.v1};
    j["area_cells"] = o.area_cells;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<DetectedObstacle> detections_from_json_text(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("detections JSON parse error: ") + e.what());
  }
  if (!arr.is_array()) throw_format_error("detections JSON must be an array");
  std::vector<DetectedObstacle> result;
  try {
    for (const nlohmann::json& j : arr) {
      DetectedObstacle o;
      o.z_exp_m = j.at("z_exp_m").get<double>();
      o.x_left_m = j.at("x_span_m").at(0).get<double>();
      o.x_right_m = j.at("x_span_m").at(1).get<double>();
      o.y_bottom_m = j.at("y_span_m").at(0).get<double>();
      o.y_top_m = j.at("y_span_m").at(1).get<double>();
      o.rect_px = {j.at("rect_px").at(0).get<double>(), j.at("rect_px").at(1).get<double>(),
                   j.at("rect_px").at(2).get<double>(), j.at("rect_px").at(3).get<double>()};
      o.area_cells = j.at("area_cells").get<int>();
      result.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("detections JSON missing/invalid field: ") + e.what());
  }
  return result;
}

void save_detections(const std::vector<DetectedObstacle>& obstacles, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io_error("cannot write detections file: " + path);
  out << detections_to_json_text(obstacles);
}

std::vector<DetectedObstacle> load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open detections file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return detections_from_json_text(ss.str());
}

}  // namespace obdet
