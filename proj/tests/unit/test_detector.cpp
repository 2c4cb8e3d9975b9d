#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"

#include "core/detector.hpp"
#include "core/error.hpp"
#include "core/geometry.hpp"
#include "test_util.hpp"

using namespace obdet;

namespace {

DetectorParams base_params() {
  DetectorParams p;
  p.cutoff_height_m = 0.3;
  p.tilt_allowance_deg = 0.0;
  p.cell_size_m = 0.1;
  p.min_points_per_cell = 3;
  p.closing_kernel_cells = 3;
  p.min_area_cells = 4;
  p.max_range_m = 20.0;
  p.grid_half_width_m = 6.0;
  return p;
}

OccupancyImage make_grid(int nx, int nz, double cell = 0.5, double origin = -2.0) {
  OccupancyImage g;
  g.nx = nx;
  g.nz = nz;
  g.cell_size_m = cell;
  g.origin_x_m = origin;
  const std::size_t n = static_cast<std::size_t>(nx) * nz;
  g.count.assign(n, 0);
  g.nearest_z.assign(n, std::numeric_limits<float>::infinity());
  g.y_min.assign(n, std::numeric_limits<float>::infinity());
  g.y_max.assign(n, -std::numeric_limits<float>::infinity());
  g.occupied.assign(n, 0);
  return g;
}

// reference component extraction: BFS flood fill instead of the DFS stack
std::vector<DetectedObstacle> oracle_extract(const OccupancyImage& img,
                                             const DetectorParams& params, const CameraRig& rig) {
  std::vector<DetectedObstacle> result;
  if (img.nx == 0 || img.nz == 0) return result;
  std::vector<std::uint8_t> visited(img.occupied.size(), 0);
  for (int cz0 = 0; cz0 < img.nz; ++cz0)
    for (int cx0 = 0; cx0 < img.nx; ++cx0) {
      if (!img.occupied[img.idx(cx0, cz0)] || visited[img.idx(cx0, cz0)]) continue;
      std::vector<CellIndex> cells;
      std::deque<CellIndex> queue{{cx0, cz0}};
      visited[img.idx(cx0, cz0)] = 1;
      while (!queue.empty()) {
        const CellIndex c = queue.front();
        queue.pop_front();
        cells.push_back(c);
        for (int dz = -1; dz <= 1; ++dz)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = c.cx + dx, nz = c.cz + dz;
            if (img.in_grid(nx, nz) && img.occupied[img.idx(nx, nz)] &&
                !visited[img.idx(nx, nz)]) {
              visited[img.idx(nx, nz)] = 1;
              queue.push_back({nx, nz});
            }
          }
      }
      if (static_cast<int>(cells.size()) < params.min_area_cells) continue;

      DetectedObstacle o;
      o.area_cells = static_cast<int>(cells.size());
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
      if (!has_stats) continue;
      o.z_exp_m = z_exp;
      o.x_left_m = img.origin_x_m + cx_min * img.cell_size_m;
      o.x_right_m = img.origin_x_m + (cx_max + 1) * img.cell_size_m;
      o.y_bottom_m = y_bottom;
      o.y_top_m = y_top > y_bottom ? y_top : y_bottom + img.cell_size_m;
      std::sort(cells.begin(), cells.end(), [](const CellIndex& a, const CellIndex& b) {
        return a.cz != b.cz ? a.cz < b.cz : a.cx < b.cx;
      });
      o.footprint = std::move(cells);
      const PixelDepth tl = project_level(rig, {o.x_left_m, o.y_top_m, o.z_exp_m});
      const PixelDepth br = project_level(rig, {o.x_right_m, o.y_bottom_m, o.z_exp_m});
      o.rect_px = {tl.u, tl.v, br.u, br.v};
      result.push_back(std::move(o));
    }
  std::sort(result.begin(), result.end(), [](const DetectedObstacle& a, const DetectedObstacle& b) {
    if (a.z_exp_m != b.z_exp_m) return a.z_exp_m < b.z_exp_m;
    if (a.x_left_m != b.x_left_m) return a.x_left_m < b.x_left_m;
    return a.y_bottom_m < b.y_bottom_m;
  });
  return result;
}

bool same_obstacles(const std::vector<DetectedObstacle>& a, const std::vector<DetectedObstacle>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const DetectedObstacle &x = a[i], &y = b[i];
    if (x.z_exp_m != y.z_exp_m || x.x_left_m != y.x_left_m || x.x_right_m != y.x_right_m ||
        x.y_bottom_m != y.y_bottom_m || x.y_top_m != y.y_top_m || x.area_cells != y.area_cells ||
        x.footprint != y.footprint)
      return false;
    if (x.rect_px.u0 != y.rect_px.u0 || x.rect_px.v0 != y.rect_px.v0 ||
        x.rect_px.u1 != y.rect_px.u1 || x.rect_px.v1 != y.rect_px.v1)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("cut_road_plane keeps exactly the points outside the slab") {
  DetectorParams p = base_params();
  p.tilt_allowance_deg = 10.0;
  const double slope = std::tan(10.0 * 0.017453292519943295);
  const double z = 2.0;
  const double thr = p.cutoff_height_m + z * slope;

  std::vector<VehiclePoint> pts = {
      {0.0, std::nextafter(thr, 1e9), z},   // just above: kept
      {0.0, thr, z},                        // exactly on: road
      {0.0, -thr, z},                       // exactly on below: road
      {0.0, -std::nextafter(thr, 1e9), z},  // just below: kept (underground artifact)
      {0.0, 0.0, z},
  };
  const std::vector<VehiclePoint> kept = cut_road_plane(pts, p);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].y > 0.0);
  CHECK(kept[1].y < 0.0);

  // random property against the documented predicate
  std::mt19937_64 rng(4u);
  std::vector<VehiclePoint> cloud;
  for (int i = 0; i < 2000; ++i)
    cloud.push_back({obtest::urand(rng, -3, 3), obtest::urand(rng, -2, 2), obtest::urand(rng, 0, 15)});
  const std::vector<VehiclePoint> got = cut_road_plane(cloud, p);
  std::size_t j = 0;
  for (const VehiclePoint& q : cloud)
    if (std::abs(q.y) > p.cutoff_height_m + q.z * slope) {
      REQUIRE(j < got.size());
      CHECK(got[j].x == q.x);
      CHECK(got[j].y == q.y);
      CHECK(got[j].z == q.z);
      ++j;
    }
  CHECK(j == got.size());

  DetectorParams bad = p;
  bad.cutoff_height_m = 0.0;
  CHECK_THROWS_AS(cut_road_plane(pts, bad), Error);
  bad = p;
  bad.tilt_allowance_deg = 45.0;
  CHECK_THROWS_AS(cut_road_plane(pts, bad), Error);
}

TEST_CASE("build_occupancy bins points into half-open cells") {
  DetectorParams p = base_params();
  p.cell_size_m = 0.5;
  p.grid_half_width_m = 1.0;
  p.max_range_m = 2.0;
  p.min_points_per_cell = 3;

  std::vector<VehiclePoint> pts = {
      {-1.0, 0.5, 0.25},       // leftmost cell
      {-0.5, 0.5, 0.25},       // left edge of column 1 belongs to column 1
      {-0.5 - 1e-9, 0.5, 0.25},// still column 0
      {1.0, 0.5, 0.25},        // right edge: outside
      {0.0, 0.5, 0.0},         // z = 0: dropped
      {0.0, 0.5, -1.0},        // behind: dropped
      {0.0, 0.5, 2.0},         // z = max_range: kept, clamped into last row
      {0.0, 0.5, 2.0 + 1e-9},  // beyond: dropped
  };
  OccupancyImage g = build_occupancy(pts, p);
  REQUIRE(g.nx == 4);
  REQUIRE(g.nz == 4);
  CHECK(g.origin_x_m == -1.0);
  CHECK(g.dropped_points == 4);
  CHECK(g.count[g.idx(0, 0)] == 2);  // x = -1.0 and x = -0.5-eps
  CHECK(g.count[g.idx(1, 0)] == 1);
  CHECK(g.count[g.idx(2, 3)] == 1);  // z = 2.0 clamped to row 3

  // per-cell stats accumulate extrema
  std::vector<VehiclePoint> stats = {
      {0.1, -0.4, 1.1}, {0.1, 0.9, 1.3}, {0.1, 0.5, 1.2}};
  OccupancyImage s = build_occupancy(stats, p);
  const std::size_t i = s.idx(2, 2);
  CHECK(s.count[i] == 3);
  CHECK(s.nearest_z[i] == 1.1f);
  CHECK(s.y_min[i] == -0.4f);
  CHECK(s.y_max[i] == 0.9f);
  CHECK(s.occupied[i] == 1);
  p.min_points_per_cell = 4;
  OccupancyImage s4 = build_occupancy(stats, p);
  CHECK(s4.occupied[s4.idx(2, 2)] == 0);
  CHECK(s4.count[s4.idx(2, 2)] == 3);
}

TEST_CASE("raising min_points_per_cell only clears cells") {
  std::mt19937_64 rng(8u);
  std::vector<VehiclePoint> cloud;
  for (int i = 0; i < 3000; ++i)
    cloud.push_back({obtest::urand(rng, -6, 6), obtest::urand(rng, -1, 2), obtest::urand(rng, 0.1, 19.9)});
  DetectorParams lo = base_params(), hi = base_params();
  lo.min_points_per_cell = 2;
  hi.min_points_per_cell = 5;
  OccupancyImage a = build_occupancy(cloud, lo);
  OccupancyImage b = build_occupancy(cloud, hi);
  REQUIRE(a.occupied.size() == b.occupied.size());
  for (std::size_t i = 0; i < a.occupied.size(); ++i) {
    if (b.occupied[i]) CHECK(a.occupied[i]);
    CHECK(a.count[i] == b.count[i]);
  }
}

TEST_CASE("morphological closing bridges gaps, keeps islands, and is idempotent") {
  DetectorParams p = base_params();
  p.closing_kernel_cells = 3;

  OccupancyImage g = make_grid(8, 6);
  g.occupied[g.idx(2, 2)] = 1;
  g.occupied[g.idx(4, 2)] = 1;
  g.count[g.idx(2, 2)] = 5;
  g.count[g.idx(4, 2)] = 5;
  OccupancyImage c = close_morphological(g, p);
  CHECK(c.occupied[c.idx(2, 2)]);
  CHECK(c.occupied[c.idx(3, 2)]);  // gap bridged
  CHECK(c.occupied[c.idx(4, 2)]);
  int n_occ = 0;
  for (std::uint8_t v : c.occupied) n_occ += v;
  CHECK(n_occ == 3);            // nothing else appears
  CHECK(c.count == g.count);    // stats untouched
  CHECK(c.nearest_z == g.nearest_z);

  OccupancyImage lone = make_grid(8, 6);
  lone.occupied[lone.idx(0, 0)] = 1;  // corner survives thanks to the padded buffer
  OccupancyImage lc = close_morphological(lone, p);
  CHECK(lc.occupied == lone.occupied);

  // identity kernel
  DetectorParams k1 = p;
  k1.closing_kernel_cells = 1;
  CHECK(close_morphological(g, k1).occupied == g.occupied);

  // random grids: extensive and idempotent
  std::mt19937_64 rng(12u);
  for (int rep = 0; rep < 20; ++rep) {
    OccupancyImage r = make_grid(obtest::irand(rng, 3, 16), obtest::irand(rng, 3, 16));
    for (std::uint8_t& v : r.occupied) v = obtest::urand(rng) < 0.3 ? 1 : 0;
    DetectorParams q = p;
    q.closing_kernel_cells = 2 * obtest::irand(rng, 0, 2) + 1;  // 1, 3 or 5
    OccupancyImage c1 = close_morphological(r, q);
    for (std::size_t i = 0; i < r.occupied.size(); ++i)
      if (r.occupied[i]) CHECK(c1.occupied[i]);
    OccupancyImage c2 = close_morphological(c1, q);
    CHECK(c2.occupied == c1.occupied);
  }
}

TEST_CASE("extract_obstacles equals the flood-fill reference") {
  std::mt19937_64 rng(21u);
  const CameraRig rig = obtest::small_rig();
  for (int rep = 0; rep < 40; ++rep) {
    OccupancyImage g = make_grid(obtest::irand(rng, 4, 18), obtest::irand(rng, 4, 18), 0.25, -1.5);
    for (std::size_t i = 0; i < g.occupied.size(); ++i) {
      if (obtest::urand(rng) < 0.35) {
        g.occupied[i] = 1;
        // some occupied cells carry no source points (filled by closing)
        if (obtest::urand(rng) < 0.8) {
          g.count[i] = obtest::irand(rng, 1, 4);
          g.nearest_z[i] = static_cast<float>(obtest::urand(rng, 0.5, 15.0));
          g.y_min[i] = static_cast<float>(obtest::urand(rng, -1.0, 0.5));
          g.y_max[i] = g.y_min[i] + static_cast<float>(obtest::urand(rng, 0.0, 1.5));
        }
      }
    }
    DetectorParams p = base_params();
    p.min_area_cells = obtest::irand(rng, 1, 4);
    CHECK(same_obstacles(extract_obstacles(g, p, rig), oracle_extract(g, p, rig)));
  }

  // empty grid -> no obstacles
  DetectorParams p = base_params();
  CHECK(extract_obstacles(OccupancyImage{}, p, obtest::small_rig()).empty());
}

TEST_CASE("single-point components get a one-cell-high box") {
  DetectorParams p = base_params();
  p.min_area_cells = 1;
  p.cell_size_m = 0.5;
  OccupancyImage g = make_grid(6, 6);
  const std::size_t i = g.idx(3, 4);
  g.occupied[i] = 1;
  g.count[i] = 7;
  g.nearest_z[i] = 2.25f;
  g.y_min[i] = g.y_max[i] = 0.8f;  // a single point has zero vertical extent
  std::vector<DetectedObstacle> obs = extract_obstacles(g, p, obtest::small_rig());
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].y_bottom_m == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(obs[0].y_top_m == doctest::Approx(0.8 + 0.5).epsilon(1e-6));
  CHECK(obs[0].z_exp_m == 2.25);
  CHECK(obs[0].area_cells == 1);
  REQUIRE(obs[0].footprint.size() == 1);
  CHECK(obs[0].footprint[0] == CellIndex{3, 4});

  // a component whose every cell lacks source points is dropped entirely
  OccupancyImage hollow = make_grid(6, 6);
  hollow.occupied[hollow.idx(1, 1)] = 1;
  hollow.occupied[hollow.idx(2, 1)] = 1;
  CHECK(extract_obstacles(hollow, p, obtest::small_rig()).empty());
}

TEST_CASE("detect locates a fronto-parallel box at its front distance") {
  CameraRig rig = obtest::small_rig();
  rig.pitch_deg = 0.0;  // keeps the hand-built depth map analytic

  DepthMap depth(rig.image_width, rig.image_height, 20.0);
  for (int v = 0; v < rig.image_height; ++v) {
    for (int u = 0; u < rig.image_width; ++u) {
      const double x3 = (u - rig.principal_u) / rig.focal_px * 3.0;
      const double y3 = rig.mount_height_m - (v - rig.principal_v) / rig.focal_px * 3.0;
      if (std::abs(x3) <= 0.5 && y3 >= 0.0 && y3 <= 1.5) {
        depth.px.at(u, v) = 3.0f;  // box face at z = 3
      } else if (v > rig.principal_v) {
        const double d = rig.mount_height_m * rig.focal_px / (v - rig.principal_v);
        if (d <= 20.0) depth.px.at(u, v) = static_cast<float>(d);  // ground
      }
    }
  }

  DetectorParams p = base_params();
  std::vector<DetectedObstacle> obs = detect(depth, rig, p);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].z_exp_m == 3.0);
  CHECK(obs[0].x_left_m == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(obs[0].x_right_m == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(obs[0].y_bottom_m == doctest::Approx(0.3375).epsilon(1e-6));  // lowest row above the cutoff
  CHECK(obs[0].y_top_m == doctest::Approx(1.4625).epsilon(1e-6));
  for (const CellIndex& c : obs[0].footprint) CHECK(c.cz == 30);

  // the reported rectangle is the projected front plane
  const PixelDepth tl = project_level(rig, {obs[0].x_left_m, obs[0].y_top_m, obs[0].z_exp_m});
  const PixelDepth br = project_level(rig, {obs[0].x_right_m, obs[0].y_bottom_m, obs[0].z_exp_m});
  CHECK(obs[0].rect_px.u0 == tl.u);
  CHECK(obs[0].rect_px.v0 == tl.v);
  CHECK(obs[0].rect_px.u1 == br.u);
  CHECK(obs[0].rect_px.v1 == br.v);

  // an all-invalid map detects nothing
  DepthMap blank(rig.image_width, rig.image_height, 20.0);
  CHECK(detect(blank, rig, p).empty());

  // dimension mismatch is rejected
  DepthMap wrong(10, 10, 20.0);
  CHECK_THROWS_AS(detect(wrong, rig, p), Error);

  // mono rigs (no baseline) are fine for detection
  CameraRig mono = rig;
  mono.baseline_m = 0.0;
  CHECK(detect(depth, mono, p).size() == 1);
}

TEST_CASE("detections JSON round trip") {
  std::vector<DetectedObstacle> obs(2);
  obs[0].z_exp_m = 3.25;
  obs[0].x_left_m = -0.5;
  obs[0].x_right_m = 0.75;
  obs[0].y_bottom_m = 0.31;
  obs[0].y_top_m = 1.9;
  obs[0].rect_px = {10.5, 4.25, 50.0, 40.0};
  obs[0].area_cells = 17;
  obs[1].z_exp_m = 7.125;
  obs[1].rect_px = {1, 2, 3, 4};
  obs[1].area_cells = 4;

  const std::string text = detections_to_json_text(obs);
  const std::vector<DetectedObstacle> back = detections_from_json_text(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].z_exp_m == 3.25);
  CHECK(back[0].x_left_m == -0.5);
  CHECK(back[0].x_right_m == 0.75);
  CHECK(back[0].y_bottom_m == 0.31);
  CHECK(back[0].y_top_m == 1.9);
  CHECK(back[0].rect_px.u0 == 10.5);
  CHECK(back[0].rect_px.v1 == 40.0);
  CHECK(back[0].area_cells == 17);
  CHECK(back[1].z_exp_m == 7.125);

  // footprints are deliberately not serialized
  CHECK(back[0].footprint.empty());

  CHECK_THROWS_AS(detections_from_json_text("{"), Error);
  CHECK_THROWS_AS(detections_from_json_text("{}"), Error);
  CHECK_THROWS_AS(detections_from_json_text("[{\"z_exp_m\": 1.0}]"), Error);

  obtest::TempDir tmp;
  save_detections(obs, tmp.file("d.json"));
  CHECK(load_detections(tmp.file("d.json")).size() == 2);
  CHECK_THROWS_AS(load_detections(tmp.file("missing.json")), Error);
}
