#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/image.hpp"

namespace obdet {

struct DetectorParams {
  double cutoff_height_m = 0.3;    // road-plane cutoff at z = 0
  double tilt_allowance_deg = 10;  // max admissible road tilt, raises the cutoff with z
  double cell_size_m = 0.1;        // occupancy grid cell side
  int min_points_per_cell = 5;     // binarization threshold
  int closing_kernel_cells = 3;    // odd square structuring element side
  int min_area_cells = 4;          // component area filter
  double max_range_m = 20.0;       // grid depth extent
  double grid_half_width_m = 6.0;  // grid lateral extent to each side

  void validate() const;
};

// Ground-plane projection of the obstacle point cloud. Cell (cx, cz) covers
// x in [origin_x + cx*cell, origin_x + (cx+1)*cell), z in [cz*cell,
// (cz+1)*cell). build_occupancy sets occupied = (count >= min_points_per_cell);
// close_morphological rewrites occupied only, stats stay as accumulated.
struct OccupancyImage {
  int nx = 0, nz = 0;
  double origin_x_m = 0.0;  // x coordinate of the left edge of column 0
  double cell_size_m = 0.0;
  std::vector<int> count;
  std::vector<float> nearest_z;  // min point z per cell, meters
  std::vector<float> y_min, y_max;
  std::vector<std::uint8_t> occupied;
  long dropped_points = 0;  // points outside the grid extent

  std::size_t idx(int cx, int cz) const { return static_cast<std::size_t>(cz) * nx + cx; }
  bool in_grid(int cx, int cz) const { return cx >= 0 && cx < nx && cz >= 0 && cz < nz; }
};

struct CellIndex {
  int cx = 0, cz = 0;
  bool operator==(const CellIndex&) const = default;
};

struct DetectedObstacle {
  double z_exp_m = 0.0;  // distance to the fronto-parallel front plane
  double x_left_m = 0.0, x_right_m = 0.0;
  double y_bottom_m = 0.0, y_top_m = 0.0;
  std::vector<CellIndex> footprint;  // occupied cells of the component
  RectPx rect_px;                    // front plane projected to the level-rectified image
  int area_cells = 0;
};

// Keeps points outside the road-plane slab |y| > cutoff + z*tan(tilt):
// above-road obstacle points as well as below-road artifacts (reflective
// floors mirror geometry underground); everything within the slab is road.
std::vector<VehiclePoint> cut_road_plane(const std::vector<VehiclePoint>& points,
                                         const DetectorParams& params);

OccupancyImage build_occupancy(const std::vector<VehiclePoint>& points,
                               const DetectorParams& params);

// Binary closing (dilate, then erode) with a square kernel. Computed on a
// padded buffer so the result equals the unbounded-plane closing restricted
// to the grid, which makes it idempotent.
OccupancyImage close_morphological(const OccupancyImage& img, const DetectorParams& params);

// 8-connected components of the occupied mask, filtered by area; z_exp is
// the minimum per-cell nearest-z over the component.
std::vector<DetectedObstacle> extract_obstacles(const OccupancyImage& img,
                                                const DetectorParams& params,
                                                const CameraRig& rig);

// Full pipeline: backproject valid depth pixels, cut the road slab, build and
// close the occupancy image, extract components. Sorted by ascending z_exp.
std::vector<DetectedObstacle> detect(const DepthMap& depth, const CameraRig& rig,
                                     const DetectorParams& params);

std::string detections_to_json_text(const std::vector<DetectedObstacle>& obstacles);
std::vector<DetectedObstacle> detections_from_json_text(const std::string& text);
void save_detections(const std::vector<DetectedObstacle>& obstacles, const std::string& path);
std::vector<DetectedObstacle> load_detections(const std::string& path);

}  // namespace obdet
